#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vcmbench/codec_orchestrator.hpp"
#include "vcmbench/datamodel.hpp"

namespace vcmbench {

// Iteration counts per training method and detector.
struct IterationDefaults {
  long long classic = 0;
  long long augmentation = 0;
  long long finetune = 0;
};

inline constexpr IterationDefaults kFasterRcnnIterations{25'000, 35'000, 10'000};
inline constexpr IterationDefaults kMaskRcnnIterations{24'000, 34'000, 10'000};

// "faster_rcnn" or "mask_rcnn"; throws DataError otherwise.
const IterationDefaults& iteration_defaults(std::string_view detector);
// Learning rate, batch size and decay schedule, stored verbatim in schedules.
nlohmann::json default_hyperparameters(std::string_view detector);

struct AugmentOptions {
  std::string name = "augmented";
  std::string detector = "faster_rcnn";
  long long iterations = 0;  // 0 selects the detector default
  ClassTable classes = ClassTable::road_users();
};

// Pristine records for every PNG in dir, ids taken from the file stems.
std::vector<ImageRecord> pristine_records_from_dir(const std::filesystem::path& dir);

// Pristine set plus one compressed copy per image and quality level, trained
// in a single mixed phase. Every run must cover every pristine image.
DatasetManifest build_augmented_manifest(const std::vector<ImageRecord>& pristine,
                                         const std::vector<CompressionRun>& runs, const AugmentOptions& opts = {});

// Two ordered phases: pristine images, then the compressed selector.
TrainingSchedule build_finetune_schedule(long long pristine_iters, long long finetune_iters,
                                         const ImageSelector& compressed, std::string detector = "faster_rcnn");
TrainingSchedule default_finetune_schedule(std::string_view detector, const ImageSelector& compressed);

// Same image set as the augmented manifest, scheduled as pristine training
// followed by fine-tuning on every compressed level.
DatasetManifest build_finetune_manifest(const std::vector<ImageRecord>& pristine,
                                        const std::vector<CompressionRun>& runs, const AugmentOptions& opts = {});

}  // namespace vcmbench
