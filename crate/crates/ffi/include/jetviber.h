/* C interface to the jetviber symbolic engine. */

#ifndef JETVIBER_H
#define JETVIBER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of an FFI call, matching the engine's exit-code contract.
 */
typedef enum JvStatus {
  /**
   * The call succeeded; asserted identities hold.
   */
  JvOk = 0,
  /**
   * The computation ran but the mathematical assertion is false
   * (a candidate fails the bivector conditions, a bracket is nonzero).
   */
  JvFail = 1,
  /**
   * Bad input: null pointer, invalid UTF-8, unparsable source, unknown
   * name.
   */
  JvError = 2,
  /**
   * The engine tripped an internal invariant; the result is unusable.
   */
  JvInternal = 3,
} JvStatus;

/**
 * An opaque parsed session: declarations plus the equation model built
 * from them. Create with [`jv_session_parse`], release with
 * [`jv_session_free`].
 */
typedef struct JvSession JvSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The crate version as a static string; do not free.
 */
const char *jv_version(void);

/**
 * Detail text for the most recent non-OK call on this thread, or NULL if
 * it succeeded. The caller owns the string: release with
 * [`jv_string_free`].
 */
char *jv_last_error(void);

/**
 * Releases a string returned through any out-parameter of this library.
 *
 * # Safety
 * `s` must be a pointer previously returned by this library and not yet
 * freed; NULL is accepted and ignored.
 */
void jv_string_free(char *s);

/**
 * Parses session source (the same language the CLI reads: `indep`,
 * `equation`, `function`, `constant`, `let`, `bivector`, `instantiate`)
 * and builds the equation model. Returns NULL on error, with detail in
 * [`jv_last_error`]. The source must declare an equation.
 *
 * # Safety
 * `src` must be NULL or a NUL-terminated string valid for the call.
 */
struct JvSession *jv_session_parse(const char *src);

/**
 * Releases a session handle. NULL is accepted and ignored.
 *
 * # Safety
 * `s` must be NULL or a pointer from [`jv_session_parse`] not yet freed.
 */
void jv_session_free(struct JvSession *s);

/**
 * Checks whether `expr` — a declared bivector's name or an expression in
 * the session language — satisfies the bivector conditions on the
 * session's equation. On success writes the factorization table to
 * `out_detail`; on `JvFail` writes the violated condition's residual.
 *
 * # Safety
 * `session` must come from [`jv_session_parse`]; `expr` must be a valid
 * NUL-terminated string; `out_detail` may be NULL or must point to a
 * writable `char*`.
 */
enum JvStatus jv_check_bivector(const struct JvSession *session,
                                const char *expr,
                                char **out_detail);

/**
 * Computes the bracket of two bivectors (names or expressions) reduced on
 * the cotangent equation and writes its canonical form to `out_value`
 * (`"0"` when it vanishes).
 *
 * # Safety
 * Same contracts as [`jv_check_bivector`] for each argument.
 */
enum JvStatus jv_schouten_bracket(const struct JvSession *session,
                                  const char *a,
                                  const char *b,
                                  char **out_value);

/**
 * Decides whether a bivector is Poisson (vanishing self-bracket). Writes
 * 1 or 0 to `out_flag` and the self-bracket's canonical form to
 * `out_witness`. The status stays `JvOk` either way: a nonzero
 * self-bracket is an answer, not an error.
 *
 * # Safety
 * Same contracts as [`jv_check_bivector`]; `out_flag` may be NULL or must
 * point to a writable int.
 */
enum JvStatus jv_is_poisson(const struct JvSession *session,
                            const char *expr,
                            int *out_flag,
                            char **out_witness);

/**
 * Reduces an expression to its normal form on the equation
 * (`cotangent = 0`) or on the cotangent equation (`cotangent != 0`) and
 * writes the canonical result.
 *
 * # Safety
 * Same contracts as [`jv_check_bivector`].
 */
enum JvStatus jv_reduce(const struct JvSession *session,
                        const char *expr,
                        int cotangent,
                        char **out_value);

/**
 * Runs the bivector search with jets up to `max_jet_order` and polynomial
 * coefficients in the independent variables up to `degree`, writing the
 * basis of the solution space as a JSON array of canonical expressions.
 *
 * # Safety
 * `session` must come from [`jv_session_parse`]; `out_json` may be NULL or
 * must point to a writable `char*`.
 */
enum JvStatus jv_search_json(const struct JvSession *session,
                             uint32_t max_jet_order,
                             uint32_t degree,
                             char **out_json);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* JETVIBER_H */
