/* Minimal C client: prints the G-expectation of x^2 and exits nonzero on
 * any unexpected status. */
#include <math.h>
#include <stdio.h>

#include "gconvex.h"

static int check(GcxStatus s, const char *what) {
  if (s != GCX_STATUS_OK) {
    fprintf(stderr, "%s: status %d: %s\n", what, (int)s, gcx_last_error());
    return 1;
  }
  return 0;
}

int main(void) {
  GcxBand *band = NULL;
  GcxFunction *phi = NULL;
  GcxGridSpec grid = {1.0, 8.5, 201, 0.5};
  double v = 0.0;
  if (check(gcx_band_new(1.0, 2.0, &band), "band")) return 1;
  if (check(gcx_function_parse("x^2", &phi), "parse")) return 1;
  if (check(gcx_g_expectation(band, phi, 1.0, &grid, &v), "g_expectation")) return 1;
  if (gcx_function_parse("sin(", &phi) != GCX_STATUS_PARSE_ERROR) return 1;
  printf("%.6f\n", v);
  gcx_function_free(phi);
  gcx_band_free(band);
  return fabs(v - 2.0) < 1e-2 ? 0 : 1;
}
