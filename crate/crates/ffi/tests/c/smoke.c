#include <stdio.h>
#include <string.h>
#include "huh.h"

#define CHECK(call)                                                        \
  do {                                                                     \
    HuhStatus s_ = (call);                                                 \
    if (s_ != HUH_STATUS_OK) {                                             \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, huh_last_error()); \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(int argc, char **argv) {
  if (argc != 2) {
    fprintf(stderr, "usage: smoke OUT_DIR\n");
    return 2;
  }
  const char *srt =
      "1\n00:00:00,000 --> 00:00:04,000\nthe model reads text\n\n"
      "2\n00:00:06,000 --> 00:00:09,000\nit predicts the next character\n\n";
  HuhTranscript *t = NULL;
  CHECK(huh_transcript_parse((const uint8_t *)srt, strlen(srt), "srt", "c-demo", NULL, &t));
  CHECK(huh_transcript_punctuate(t, 1200));
  if (huh_transcript_cue_count(t) != 2 || huh_transcript_duration_ms(t) != 9000) return 1;

  HuhBundle *b = NULL;
  CHECK(huh_bundle_generate_mock(t, 5000, 0, -1, "2024-01-01T00:00:00Z", &b));
  if (huh_bundle_slot_count(b) != 2) return 1;

  bool available = false;
  CHECK(huh_bundle_is_available(b, 4999, 1, &available));
  if (available) return 1;
  CHECK(huh_bundle_is_available(b, 5000, 1, &available));
  if (!available) return 1;

  char *json = NULL;
  CHECK(huh_bundle_lookup_json(b, 9000, 2, &json));
  printf("%s\n", json);
  huh_string_free(json);

  if (huh_bundle_lookup_json(b, 0, 3, &json) != HUH_STATUS_INVALID_ARGUMENT) return 1;
  if (huh_last_error() == NULL) return 1;

  CHECK(huh_bundle_export(b, argv[1]));

  double kg = 0;
  CHECK(huh_emissions_estimate(390962, 37435, 0.0, &kg));
  printf("%.1f\n", kg);

  huh_bundle_free(b);
  huh_transcript_free(t);
  return 0;
}
