use std::fmt;
use std::sync::Arc;

use super::Point;

/// Symmetric 2x2 tensor, row-major.
pub type Tensor2 = [[f64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConductivityKind {
    Constant,
    ScalarFunction,
    TensorFunction,
}

type Evaluator = Arc<dyn Fn(Point) -> Tensor2 + Send + Sync>;

/// Conductivity sampled pointwise; scalar fields evaluate to `s * I`.
#[derive(Clone)]
pub struct ConductivityField {
    kind: ConductivityKind,
    label: String,
    eval: Evaluator,
}

impl fmt::Debug for ConductivityField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConductivityField")
            .field("kind", &self.kind)
            .field("label", &self.label)
            .finish()
    }
}

impl ConductivityField {
    pub fn constant(value: f64) -> Self {
        ConductivityField {
            kind: ConductivityKind::Constant,
            label: format!("{value}"),
            eval: Arc::new(move |_| [[value, 0.0], [0.0, value]]),
        }
    }

    pub fn scalar(label: impl Into<String>, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        ConductivityField {
            kind: ConductivityKind::ScalarFunction,
            label: label.into(),
            eval: Arc::new(move |p| {
                let s = f(p);
                [[s, 0.0], [0.0, s]]
            }),
        }
    }

    pub fn tensor(label: impl Into<String>, f: impl Fn(Point) -> Tensor2 + Send + Sync + 'static) -> Self {
        ConductivityField {
            kind: ConductivityKind::TensorFunction,
            label: label.into(),
            eval: Arc::new(f),
        }
    }

    /// sigma(x, y) = 2 + sin(x) cos(y)
    pub fn sinusoidal() -> Self {
        Self::scalar("2+sin(x)cos(y)", |p| 2.0 + p[0].sin() * p[1].cos())
    }

    pub fn kind(&self) -> ConductivityKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, p: Point) -> Tensor2 {
        (self.eval)(p)
    }

    /// Smallest eigenvalue of the symmetric part at `p`.
    pub fn min_eigenvalue(&self, p: Point) -> f64 {
        let s = self.eval(p);
        let (a, d) = (s[0][0], s[1][1]);
        let b = 0.5 * (s[0][1] + s[1][0]);
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        mean - radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalue_of_anisotropic_tensor() {
        let c = ConductivityField::tensor("aniso", |_| [[2.0, 1.0], [1.0, 2.0]]);
        assert!((c.min_eigenvalue([0.0, 0.0]) - 1.0).abs() < 1e-14);
        assert_eq!(c.kind(), ConductivityKind::TensorFunction);
    }

    #[test]
    fn sinusoidal_stays_positive() {
        let c = ConductivityField::sinusoidal();
        for i in 0..50 {
            let x = -3.0 + 0.13 * i as f64;
            assert!(c.min_eigenvalue([x, 0.7 * x]) >= 1.0);
        }
    }
}
