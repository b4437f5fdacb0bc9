/* C interface for the fashioncut shared library.
 *
 * All functions return fc_status; on failure fc_last_error() holds a
 * human-readable message for the calling thread. Heap objects cross the
 * boundary as opaque handles with explicit free functions.
 */
#ifndef FASHIONCUT_C_H
#define FASHIONCUT_C_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fc_status {
  FC_OK = 0,
  FC_ERR_PARAM = 2,   /* bad arguments, bad config, validation failures */
  FC_ERR_RUNTIME = 3, /* I/O and execution failures */
} fc_status;

/* library version string, static storage */
const char* fc_version(void);

/* last error message of the calling thread, static storage; empty if none */
const char* fc_last_error(void);

/* free any string returned through a char** out-parameter */
void fc_string_free(char* s);

/* --- dataset generation --------------------------------------------------
 * domain is "source" or "target". Writes 7*per_class PNGs plus manifest.csv
 * under out_dir; out_manifest_path (optional) receives the manifest path. */
fc_status fc_generate_dataset(const char* out_dir, int per_class, const char* domain,
                              uint64_t seed, int image_size, char** out_manifest_path);

/* --- training -------------------------------------------------------------
 * config_path: JSON train config (strict keys). resume_checkpoint may be
 * NULL. out_summary_json (optional) receives the final loss breakdown. */
fc_status fc_train(const char* config_path, const char* out_dir, const char* resume_checkpoint,
                   char** out_summary_json);

/* resolved config (defaults filled in) for the effective-config echo */
fc_status fc_resolve_train_config(const char* config_path, char** out_json);

/* --- evaluation / experiments --------------------------------------------
 * Reports are opaque; fc_report_json serializes them. */
typedef struct fc_report fc_report;

fc_status fc_evaluate(const char* checkpoint_path, const char* eval_manifest, fc_report** out);

/* methods_csv: comma-separated subset of
 * no_adaptation,translation_only,fashion_cut,fashion_cut_pseudo.
 * seeds_csv: comma-separated integers. Artifacts land under out_dir. */
fc_status fc_compare(const char* config_path, const char* eval_manifest, const char* methods_csv,
                     const char* seeds_csv, const char* out_dir, int jobs, fc_report** out);

/* counts_csv: ascending synthetic-image counts. */
fc_status fc_ablate(const char* config_path, const char* eval_manifest, const char* counts_csv,
                    const char* seeds_csv, const char* out_dir, int jobs, fc_report** out);

const char* fc_report_json(const fc_report* report);
void fc_report_free(fc_report* report);

/* --- translation preview --------------------------------------------------
 * 2-row grid (inputs over translations) of the first n manifest images. */
fc_status fc_translate_preview(const char* checkpoint_path, const char* manifest_path, int n,
                               const char* out_png);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FASHIONCUT_C_H */
