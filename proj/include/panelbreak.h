/* C interface to the panel break toolbox. All inputs and outputs cross the
 * boundary as UTF-8 strings: panels as CSV, options and results as JSON.
 * Every function returns a status code; 0 is success. On failure the
 * thread-local message from pb_last_error() explains what went wrong.
 *
 * Status codes: 1 bad input or options, 2 statistically infeasible request,
 * 3 numerical failure, 4 internal invariant violation. */

#ifndef PANELBREAK_H
#define PANELBREAK_H

#ifdef __cplusplus
extern "C" {
#endif

typedef struct pb_panel pb_panel;
typedef struct pb_result pb_result;

const char* pb_version(void);
const char* pb_last_error(void);

/* schema_json: {"unit": col, "period": col, "y": col,
 *               "x": [cols], "w": [cols], "observed": [cols]}
 * x and observed may be empty or omitted; w needs at least one column. */
int pb_panel_load_csv(const char* path, const char* schema_json, pb_panel** out);
int pb_panel_parse_csv(const char* text, const char* schema_json, pb_panel** out);
int pb_panel_write_csv(const pb_panel* panel, const char* path);
int pb_panel_dims(const pb_panel* panel, int* n_units, int* n_periods, int* p_x, int* p_w,
                  int* p_observed);
void pb_panel_free(pb_panel* panel);

/* dgp_json mirrors the simulation spec (n_units, n_periods, p_x, p_w, m,
 * breaks, beta, delta, noise and loading settings, seed). truth_out, when
 * non-null, receives the generating coefficients as a result object. */
int pb_generate(const char* dgp_json, pb_panel** out, pb_result** truth_out);

/* options_json accepts:
 *   k            breaks to estimate (or "dates" for a fixed-date fit)
 *   trim, breaking_constant, max_iter, multi_start, seed, bandwidth */
int pb_estimate(const pb_panel* panel, const char* options_json, pb_result** out);

/* test_kind: "supf", "wdmax", "seqf", or "fstat".
 * options_json adds: k (supf: breaks; wdmax: k_max; seqf: null count),
 * dates (fstat: required; seqf: explicit null dates), levels, cv_table,
 * unit_weights. */
int pb_test(const pb_panel* panel, const char* test_kind, const char* options_json,
            pb_result** out);

/* options_json: alpha plus either dates or k (estimated first). */
int pb_confidence(const pb_panel* panel, const char* options_json, pb_result** out);

/* options_json: k_cap, alpha, plus the usual estimation settings. */
int pb_num_breaks(const pb_panel* panel, const char* options_json, pb_result** out);

/* options_json: p_w, trim, k_max, reps, grid, seed, threads, levels,
 * out (CSV path to write), merge_into (existing CSV to fold the run into). */
int pb_cv_simulate(const char* options_json, pb_result** out);

/* config_json: kind, dgp {...}, reps, test_kind, k_test, alpha, k_cap,
 * threads, plus estimation/test settings. */
int pb_mc_experiment(const char* config_json, pb_result** out);

const char* pb_result_json(const pb_result* result);
const char* pb_result_text(const pb_result* result);
void pb_result_free(pb_result* result);

#ifdef __cplusplus
}
#endif

#endif /* PANELBREAK_H */
