/* SemPLeS weakly-supervised segmentation laboratory - public C API.
 *
 * All functions return SEMPLES_OK (0) on success or a nonzero error class;
 * semples_last_error() describes the most recent failure on the calling
 * thread. Handles are opaque and freed with their matching _free call.
 */
#ifndef SEMPLES_H
#define SEMPLES_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum semples_status {
    SEMPLES_OK = 0,
    SEMPLES_ERR_CONFIG = 2,  /* bad config / arguments */
    SEMPLES_ERR_DATA = 3,    /* missing or malformed data / artifacts */
    SEMPLES_ERR_NUMERIC = 4, /* NaN or other numeric abort */
    SEMPLES_ERR_INTERNAL = 5
};

const char* semples_version(void);
const char* semples_last_error(void);

/* ---- configuration ------------------------------------------------- */

typedef struct semples_config semples_config;

/* dataset_tag: "voc", "coco", or "toy". */
semples_config* semples_config_create(const char* dataset_tag);
/* Applies a key=value config file on top of the base tag's defaults. */
semples_config* semples_config_load(const char* base_tag, const char* path);
int semples_config_set(semples_config* cfg, const char* key, const char* value);
int semples_config_get(const semples_config* cfg, const char* key, char* buf, size_t buflen);
void semples_config_free(semples_config* cfg);

/* ---- corpus -------------------------------------------------------- */

/* Writes the deterministic synthetic corpus (images, labels.tsv,
 * classes.txt, truth/ and cooccur/ maps). n_images/image_size <= 0 pick
 * the defaults (64 images of 64x64). */
int semples_make_toy_corpus(const char* out_dir, uint64_t seed, int n_images, int image_size);

/* ---- training ------------------------------------------------------ */

/* Each phase reads the corpus at corpus_dir (images/, labels.tsv,
 * classes.txt) and writes checkpoints plus a JSONL loss log under out_dir.
 * encoder_spec is "toy" (NULL defaults to it) or "file:<path>".
 * checkpoint_every > 0 also saves the trainable component every N steps. */
int semples_train_match(const char* corpus_dir, const semples_config* cfg,
                        const char* encoder_spec, int checkpoint_every, const char* out_dir);
int semples_train_prompts(const char* corpus_dir, const semples_config* cfg,
                          const char* encoder_spec, const char* generator_ckpt,
                          int checkpoint_every, const char* out_dir);
int semples_train_refine(const char* corpus_dir, const semples_config* cfg,
                         const char* encoder_spec, const char* generator_ckpt,
                         const char* bank_ckpt, int checkpoint_every, const char* out_dir);
/* Chains the three phases and finally exports CAMs to out_dir/cams. */
int semples_train_all(const char* corpus_dir, const semples_config* cfg, const char* encoder_spec,
                      int checkpoint_every, const char* out_dir);

/* ---- evaluation / visualization ------------------------------------ */

/* Writes one "SEMC" CAM container per corpus image into out_dir. */
int semples_export_cams(const char* corpus_dir, const char* generator_ckpt, const char* out_dir);

/* Thresholds CAM containers into pseudo masks, compares them against the
 * class-map PNGs in truth_dir and writes an IoU report JSON. masks_out_dir
 * may be NULL; if set, pseudo-mask PNGs are written there. */
int semples_eval(const char* cams_dir, const char* truth_dir, double bg_threshold,
                 const char* report_path, const char* masks_out_dir);

/* Prompt-to-patch similarity heatmap for class_name; writes out_png and a
 * raw float sidecar next to it. */
int semples_visualize(const char* bank_ckpt, const char* encoder_spec, const char* image_png,
                      const char* class_name, const char* out_png);

#ifdef __cplusplus
}
#endif

#endif /* SEMPLES_H */
