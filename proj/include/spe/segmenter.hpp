#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "spe/types.hpp"

namespace spe {

/// One saved state of the model under test.
struct CheckpointRef {
  std::string model_id;  // adapter registry key
  int epoch = 0;
  std::string locator;   // adapter-specific (path, URI, parameters)
};

struct CheckpointSeries {
  std::vector<CheckpointRef> checkpoints;

  std::size_t size() const { return checkpoints.size(); }

  /// At least two checkpoints, epochs strictly increasing.
  void validate() const;
};

/// Image-label pairs conditioning the reference segmenter. Hard cap of 64.
struct SupportSet {
  static constexpr std::size_t kMaxSize = 64;

  std::vector<LabeledPair> pairs;

  explicit SupportSet(std::vector<LabeledPair> p);
  std::size_t size() const { return pairs.size(); }
};

using AdapterFn = std::function<std::vector<Mask>(
    const CheckpointRef&, const std::vector<Image>&)>;

/// Model-under-test adapters keyed by CheckpointRef::model_id.
class AdapterRegistry {
 public:
  void add(const std::string& name, AdapterFn fn);
  bool contains(const std::string& name) const;
  const AdapterFn& get(const std::string& name) const;

 private:
  std::map<std::string, AdapterFn> adapters_;
};

/// Registry preloaded with the "threshold" adapter (foreground where the
/// input intensity exceeds 0.5, or the value given as locator).
AdapterRegistry default_adapters();

/// Runs the checkpoint's adapter and enforces the output contract: one mask
/// per image, same order, same shapes.
std::vector<Mask> predict_under_test(const AdapterRegistry& registry,
                                     const CheckpointRef& ckpt,
                                     const std::vector<Image>& images);

/// The reference segmenter. External plugins are separate processes speaking
/// the file protocol below; builtin plugins run in-process but read and write
/// the same work-directory layout.
struct SegmenterPlugin {
  enum class Kind { external_process, builtin };

  Kind kind = Kind::external_process;
  std::string id;       // recorded in artifacts
  std::string command;  // external: invoked as `command <workdir>`
  std::function<void(const std::filesystem::path& workdir)> handler;  // builtin
  double timeout_sec = 0;  // external only; 0 = no limit

  // One in-flight invocation per plugin instance.
  std::shared_ptr<std::mutex> serialize = std::make_shared<std::mutex>();
};

SegmenterPlugin make_external_plugin(std::string command,
                                     double timeout_sec = 0);

namespace wire {

/// Writes the request layout under workdir:
///   support/images/NNNN.png  support/labels/NNNN.png  query/images/NNNN.png
/// 8-bit grayscale, labels 0/255, zero-padded 4-digit indices.
void write_request(const std::filesystem::path& workdir,
                   const SupportSet& support,
                   const std::vector<Image>& queries);

/// Reads out/predictions/NNNN.png for every query index. Missing file ->
/// ReferenceError; wrong shape -> ProtocolError.
std::vector<Mask> read_predictions(const std::filesystem::path& workdir,
                                   std::size_t n_queries, Eigen::Index height,
                                   Eigen::Index width);

std::string frame_name(std::size_t index);

}  // namespace wire

/// One mask per query, in query order. Support and queries must be nonempty
/// and 128x128. Builtin plugins exercise the same wire protocol through a
/// scratch work directory.
std::vector<Mask> reference_infer(const SegmenterPlugin& plugin,
                                  const SupportSet& support,
                                  const std::vector<Image>& queries);

}  // namespace spe
