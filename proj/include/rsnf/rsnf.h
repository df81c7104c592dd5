/* rsnf - Ramis-Sibuya normal forms and parabolic stable manifolds.
 *
 * C interface to the computation kernel. Requests and results travel as JSON
 * documents; binary artifacts (CSV tables, SVG figures) are exposed through
 * the opaque result handle. All functions are thread-compatible: results are
 * independent objects and may be used from any thread after creation.
 */
#ifndef RSNF_H
#define RSNF_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rsnf_status {
  RSNF_OK = 0,
  RSNF_EMATH = 1,  /* the computation rejected the input or failed to stabilize */
  RSNF_EINPUT = 2, /* malformed request: schema, parse, or unknown command */
  RSNF_EINTERNAL = 3
} rsnf_status;

typedef struct rsnf_result rsnf_result;

/* Runs one command ("validate", "exp", "log", "infgen", "blowup",
 * "reduce-linear", "verify-certificate", "reduce", "classify", "stable",
 * "orbit", "report") on a JSON request. On any return value, *out is either
 * NULL or a handle that must be freed with rsnf_result_free; on errors the
 * handle carries a machine-readable diagnostic document. */
rsnf_status rsnf_run(const char* command, const char* request_json, rsnf_result** out);

/* UTF-8 JSON document with the command's primary output (or diagnostics). The
 * pointer is owned by the handle. */
const char* rsnf_result_json(const rsnf_result* r);

/* Secondary artifacts (CSV/SVG) attached to the result. */
int rsnf_result_artifact_count(const rsnf_result* r);
const char* rsnf_result_artifact_name(const rsnf_result* r, int index);
const char* rsnf_result_artifact_mime(const rsnf_result* r, int index);
const char* rsnf_result_artifact_body(const rsnf_result* r, int index);

void rsnf_result_free(rsnf_result* r);

/* Mantissa precision (bits) of the float coefficient field. Setting a value
 * other than 53 fails with RSNF_EINPUT: the kernel computes in binary64 and
 * refuses to overstate its arithmetic. */
int rsnf_get_precision(void);
rsnf_status rsnf_set_precision(int bits);

const char* rsnf_version(void);

#ifdef __cplusplus
}
#endif

#endif /* RSNF_H */
