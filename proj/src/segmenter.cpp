#include "spe/segmenter.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "spe/png_io.hpp"

namespace spe {

void CheckpointSeries::validate() const {
  if (checkpoints.size() < 2)
    throw ValidationError("checkpoint series needs at least two checkpoints");
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    if (checkpoints[i].epoch <= checkpoints[i - 1].epoch)
      throw ValidationError("checkpoint epochs must be strictly increasing");
  }
}

SupportSet::SupportSet(std::vector<LabeledPair> p) : pairs(std::move(p)) {
  if (pairs.empty()) throw ValidationError("support set is empty");
  if (pairs.size() > kMaxSize)
    throw ValidationError("support set exceeds maximum of " +
                          std::to_string(kMaxSize) + " pairs (got " +
                          std::to_string(pairs.size()) + ")");
  for (const auto& pair : pairs) {
    require_same_shape(pair.image, pair.label,
                       "support pair '" + pair.id + "'");
    if (!same_shape(pair.image, pairs.front().image))
      throw ValidationError("support set shapes are not uniform");
  }
}

void AdapterRegistry::add(const std::string& name, AdapterFn fn) {
  adapters_[name] = std::move(fn);
}

bool AdapterRegistry::contains(const std::string& name) const {
  return adapters_.count(name) > 0;
}

const AdapterFn& AdapterRegistry::get(const std::string& name) const {
  const auto it = adapters_.find(name);
  if (it == adapters_.end())
    throw ProtocolError("no adapter registered for model '" + name + "'");
  return it->second;
}

AdapterRegistry default_adapters() {
  AdapterRegistry registry;
  registry.add("threshold",
               [](const CheckpointRef& ckpt, const std::vector<Image>& images) {
                 float thresh = 0.5f;
                 if (!ckpt.locator.empty()) {
                   try {
                     thresh = std::stof(ckpt.locator);
                   } catch (const std::exception&) {
                     throw ProtocolError("threshold adapter: bad locator '" +
                                         ckpt.locator + "'");
                   }
                 }
                 std::vector<Mask> masks;
                 masks.reserve(images.size());
                 for (const auto& img : images) masks.push_back(img > thresh);
                 return masks;
               });
  return registry;
}

std::vector<Mask> predict_under_test(const AdapterRegistry& registry,
                                     const CheckpointRef& ckpt,
                                     const std::vector<Image>& images) {
  const auto& adapter = registry.get(ckpt.model_id);
  std::vector<Mask> masks = adapter(ckpt, images);
  if (masks.size() != images.size())
    throw ProtocolError("adapter '" + ckpt.model_id + "' returned " +
                        std::to_string(masks.size()) + " masks for " +
                        std::to_string(images.size()) + " images");
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (!same_shape(masks[i], images[i]))
      throw ProtocolError("adapter '" + ckpt.model_id +
                          "' returned a mask with wrong shape at index " +
                          std::to_string(i));
  }
  return masks;
}

SegmenterPlugin make_external_plugin(std::string command, double timeout_sec) {
  SegmenterPlugin plugin;
  plugin.kind = SegmenterPlugin::Kind::external_process;
  plugin.id = command;
  plugin.command = std::move(command);
  plugin.timeout_sec = timeout_sec;
  return plugin;
}

namespace wire {

std::string frame_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04zu.png", index);
  return buf;
}

void write_request(const std::filesystem::path& workdir,
                   const SupportSet& support,
                   const std::vector<Image>& queries) {
  namespace fs = std::filesystem;
  fs::create_directories(workdir / "support" / "images");
  fs::create_directories(workdir / "support" / "labels");
  fs::create_directories(workdir / "query" / "images");
  for (std::size_t i = 0; i < support.pairs.size(); ++i) {
    png::write_image8(workdir / "support" / "images" / frame_name(i),
                      support.pairs[i].image);
    png::write_mask(workdir / "support" / "labels" / frame_name(i),
                    support.pairs[i].label);
  }
  for (std::size_t i = 0; i < queries.size(); ++i)
    png::write_image8(workdir / "query" / "images" / frame_name(i),
                      queries[i]);
}

std::vector<Mask> read_predictions(const std::filesystem::path& workdir,
                                   std::size_t n_queries, Eigen::Index height,
                                   Eigen::Index width) {
  std::vector<Mask> preds;
  preds.reserve(n_queries);
  for (std::size_t i = 0; i < n_queries; ++i) {
    const auto path = workdir / "out" / "predictions" / frame_name(i);
    if (!std::filesystem::exists(path))
      throw ReferenceError("plugin produced no prediction for query " +
                           std::to_string(i) + " (" + path.string() + ")");
    Mask m = png::read_mask(path);
    if (m.rows() != height || m.cols() != width)
      throw ProtocolError("plugin prediction " + std::to_string(i) +
                          " has wrong shape");
    preds.push_back(std::move(m));
  }
  return preds;
}

}  // namespace wire

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += "'";
  return out;
}

std::filesystem::path fresh_workdir() {
  static std::atomic<unsigned long> counter{0};
  const auto base = std::filesystem::temp_directory_path();
  const unsigned long n = counter.fetch_add(1);
  return base / ("spe-plugin-" + std::to_string(::getpid()) + "-" +
                 std::to_string(n));
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void run_external(const SegmenterPlugin& plugin,
                  const std::filesystem::path& workdir) {
  const auto stderr_path = workdir / "stderr.txt";
  std::string cmd;
  if (plugin.timeout_sec > 0)
    cmd += "timeout " + std::to_string(plugin.timeout_sec) + " ";
  cmd += plugin.command + " " + shell_quote(workdir.string());
  cmd += " 2> " + shell_quote(stderr_path.string());

  const int status = std::system(cmd.c_str());
  if (status == -1)
    throw ReferenceError("failed to launch plugin: " + plugin.command);
  if (WIFEXITED(status)) {
    const int code = WEXITSTATUS(status);
    if (code == 0) return;
    if (code == 124 && plugin.timeout_sec > 0)
      throw ReferenceError("plugin timed out after " +
                               std::to_string(plugin.timeout_sec) + "s",
                           slurp(stderr_path));
    throw ReferenceError(
        "plugin exited with status " + std::to_string(code),
        slurp(stderr_path));
  }
  throw ReferenceError("plugin terminated abnormally", slurp(stderr_path));
}

}  // namespace

std::vector<Mask> reference_infer(const SegmenterPlugin& plugin,
                                  const SupportSet& support,
                                  const std::vector<Image>& queries) {
  if (queries.empty()) throw ValidationError("reference_infer: no queries");
  const Eigen::Index h = support.pairs.front().image.rows();
  const Eigen::Index w = support.pairs.front().image.cols();
  if (h != 128 || w != 128)
    throw ValidationError("reference segmenter requires 128x128 inputs");
  for (const auto& q : queries) {
    if (q.rows() != h || q.cols() != w)
      throw ValidationError("query shape differs from support shape");
  }

  std::lock_guard<std::mutex> lock(*plugin.serialize);
  const auto workdir = fresh_workdir();
  std::vector<Mask> preds;
  try {
    wire::write_request(workdir, support, queries);
    if (plugin.kind == SegmenterPlugin::Kind::external_process) {
      run_external(plugin, workdir);
    } else {
      if (!plugin.handler) throw ValidationError("builtin plugin has no handler");
      plugin.handler(workdir);
    }
    preds = wire::read_predictions(workdir, queries.size(), h, w);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove_all(workdir, ec);
    throw;
  }
  std::error_code ec;
  std::filesystem::remove_all(workdir, ec);
  return preds;
}

}  // namespace spe
