/* C boundary of the VFN library: opaque handles, integer status codes,
 * heap strings released through vfn_string_free. Every function returns
 * 0 on success or a nonzero code; vfn_last_error() describes the most
 * recent failure on the calling thread. */

#ifndef VFN_VFN_H
#define VFN_VFN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes mirrored from the library's error taxonomy. */
enum {
  VFN_OK = 0,
  VFN_ERR_INTERNAL = 1,
  VFN_ERR_INVALID_ARGUMENT = 2,
  VFN_ERR_SHAPE_MISMATCH = 3,
  VFN_ERR_PARSE = 4,
  VFN_ERR_IO = 5,
  VFN_ERR_DEGENERATE_FRAME = 6,
  VFN_ERR_NUMERIC = 7
};

typedef struct vfn_model_s vfn_model;
typedef struct vfn_dataset_s vfn_dataset;

/* Message for the last failure on this thread; empty string if none.
 * The pointer stays valid until the next failing call on the thread. */
const char* vfn_last_error(void);

/* Releases any string returned through a char** out-parameter. */
void vfn_string_free(char* s);

/* ---- model lifecycle ---- */

/* Fresh model from a model-config JSON object (NULL or "" for all
 * defaults), e.g. {"n_layers": 2, "d_v": 32}. */
int vfn_model_create(const char* model_config_json, uint64_t seed, vfn_model** out);

/* Model from a checkpoint file. Optimizer moments and the step counter
 * travel along, so a later vfn_train_run resumes where it stopped. */
int vfn_model_load(const char* checkpoint_path, vfn_model** out);

/* Writes the model (plus any optimizer state it carries) as a
 * checkpoint file that vfn_model_load accepts. */
int vfn_model_save(const vfn_model* m, const char* path);

void vfn_model_free(vfn_model* m);

/* {"config": <model config>, "step": <int>, "parameters": <count>} */
int vfn_model_info(const vfn_model* m, char** json_out);

/* ---- datasets ---- */

/* format: "jsonl", "pdb", or "auto" (by extension; directories scan for
 * *.pdb). manifest_path optionally splits by name lists; split then
 * selects "train", "validation" or "test". Without a manifest, split
 * must be NULL and the whole file loads. */
int vfn_dataset_open(const char* path, const char* format, const char* manifest_path,
                     const char* split, vfn_dataset** out);

/* Deterministic random backbones (plausible local geometry), handy for
 * smoke runs and benchmarks without real data. */
int vfn_dataset_synthetic(uint64_t seed, int64_t n_proteins, int64_t n_residues,
                          vfn_dataset** out);

int vfn_dataset_save_jsonl(const vfn_dataset* d, const char* path);
int vfn_dataset_len(const vfn_dataset* d, int64_t* out);
void vfn_dataset_free(vfn_dataset* d);

/* ---- operations ---- */

/* Returning 0 stops training early; anything else continues. */
typedef int (*vfn_eval_callback)(int64_t step, double loss, double perplexity, double recovery,
                                 void* user);

/* run_config_json carries the train/output sections (see the README's
 * run-config schema); the model section is ignored here because the
 * handle already owns its configuration. Writes checkpoints and the
 * metric log as configured. */
int vfn_train_run(vfn_model* m, const vfn_dataset* d, const char* run_config_json,
                  vfn_eval_callback on_eval, void* user, int64_t* final_step);

/* {"perplexity", "recovery": {"median", "global"}, "n_proteins",
 *  "n_residues"} over every labeled residue in the dataset. */
int vfn_evaluate(const vfn_model* m, const vfn_dataset* d, char** report_json);

/* Parses one PDB file, predicts, and returns FASTA text. chain may be
 * NULL/"" for the first chain. logits_json_out may be NULL; when given
 * it receives {"name", "logits": n x 20, "probabilities": n x 20}. */
int vfn_predict_structure(const vfn_model* m, const char* pdb_path, const char* chain,
                          char** fasta_out, char** logits_json_out);

/* level: "fast" or "full". inject_fault: NULL/"" for none, or
 * "wb-transpose" to corrupt the vector-field mixer so the property
 * suite must catch it. Writes the pass/fail report and the number of
 * failed properties; the call itself succeeds either way. */
int vfn_verify_run(const char* level, const char* inject_fault, char** report_out,
                   int* failures_out);

/* Comma-separated layer counts and residue counts; csv_out receives the
 * timing table ("layers,residues,median_ms,p95_ms"). model_config_json
 * may be NULL for the benchmark's compact default width. */
int vfn_bench_run(const char* layers_csv, const char* sizes_csv, int reps, uint64_t seed,
                  const char* model_config_json, char** csv_out);

/* Layered run-config resolution: defaults, then the config file text
 * (NULL/"" allowed), then a nested override object. Returns the full
 * resolved run config as JSON. */
int vfn_runconfig_resolve(const char* file_text, const char* overrides_json, char** resolved_out);

#ifdef __cplusplus
}
#endif

#endif /* VFN_VFN_H */
