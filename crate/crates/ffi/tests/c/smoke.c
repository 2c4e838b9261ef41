#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "srcid.h"

#define CHECK(call)                                                         \
    do {                                                                    \
        SrcidStatus s_ = (call);                                            \
        if (s_ != SRCID_STATUS_OK) {                                        \
            const char *m_ = srcid_last_error_message();                    \
            fprintf(stderr, "%s failed: %s (%s)\n", #call,                  \
                    srcid_status_name(s_), m_ ? m_ : "");                   \
            return 1;                                                       \
        }                                                                   \
    } while (0)

int main(void) {
    SrcidMesh *mesh = NULL;
    SrcidForward *fwd = NULL;
    SrcidInverse *inv = NULL;
    CHECK(srcid_mesh_build(SRCID_DOMAIN_UNIT_SQUARE, 6, 0, &mesh));
    CHECK(srcid_forward_build(mesh, SRCID_CONDUCTIVITY_CONSTANT, 1.0, 2, &fwd));
    CHECK(srcid_inverse_new(fwd, 0, &inv));

    size_t m = srcid_forward_rows(fwd), n = srcid_forward_cols(fwd);
    double *x_true = calloc(n, sizeof(double));
    double *x = calloc(n, sizeof(double));
    double *b = calloc(m, sizeof(double));
    x_true[8] = 1.0;
    x_true[40] = -1.0;
    CHECK(srcid_forward_apply(fwd, x_true, n, b, m));

    size_t support[2] = {8, 40};
    double values[2] = {1.0, -1.0};
    SrcidCertificate cert;
    CHECK(srcid_certify(inv, support, values, 2, &cert));

    SrcidSolveReport report;
    CHECK(srcid_solve_bp(inv, true, b, m, x, n, &report));
    double err = 0.0;
    for (size_t j = 0; j < n; ++j) err = fmax(err, fabs(x[j] - x_true[j]));

    SrcidStatus bad = srcid_mesh_build(SRCID_DOMAIN_CROSS, 0, 0, &mesh);
    int ok = cert.recovery_certified && err < 1e-6 && bad == SRCID_STATUS_INVALID_MESH &&
             srcid_last_error_message() != NULL;
    printf("srcid %s: m=%zu n=%zu rank=%zu alpha_max=%g err=%g\n", srcid_version(), m, n,
           srcid_inverse_rank(inv), cert.alpha_max, err);

    free(x_true);
    free(x);
    free(b);
    srcid_inverse_free(inv);
    srcid_forward_free(fwd);
    srcid_mesh_free(mesh);
    return ok ? 0 : 1;
}
