// Minimal reference-segmenter plugin used by the test suite. Speaks the file
// protocol: reads support/ and query/ from the work directory given as the
// last argument, writes out/predictions/NNNN.png.
//
// Modes (flags before the work directory):
//   default       pixelwise majority vote over the support labels
//   --copy-query  threshold each query image at 0.5
//   --skip-last   omit the final prediction (exercises missing-output errors)
//   --fail        print to stderr and exit 3

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "spe/png_io.hpp"
#include "spe/segmenter.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  std::string mode = "consensus";
  std::string workdir_arg;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--copy-query")
      mode = "copy-query";
    else if (arg == "--skip-last")
      mode = "skip-last";
    else if (arg == "--fail")
      mode = "fail";
    else
      workdir_arg = arg;
  }
  if (mode == "fail") {
    std::cerr << "echo plugin failing on request\n";
    return 3;
  }
  if (workdir_arg.empty()) {
    std::cerr << "usage: echo_plugin [--copy-query|--skip-last|--fail] "
                 "<workdir>\n";
    return 2;
  }

  try {
    const fs::path workdir = workdir_arg;

    std::vector<spe::Mask> labels;
    for (std::size_t i = 0;; ++i) {
      const auto path =
          workdir / "support" / "labels" / spe::wire::frame_name(i);
      if (!fs::exists(path)) break;
      labels.push_back(spe::png::read_mask(path));
    }
    if (labels.empty()) {
      std::cerr << "no support labels found\n";
      return 1;
    }

    // Majority vote over the support labels.
    Eigen::ArrayXXi votes =
        Eigen::ArrayXXi::Zero(labels.front().rows(), labels.front().cols());
    for (const auto& label : labels) votes += label.cast<int>();
    const spe::Mask consensus =
        votes.cast<double>() >= 0.5 * static_cast<double>(labels.size());

    fs::create_directories(workdir / "out" / "predictions");
    for (std::size_t i = 0;; ++i) {
      const auto query_path =
          workdir / "query" / "images" / spe::wire::frame_name(i);
      if (!fs::exists(query_path)) break;
      const bool last = !fs::exists(workdir / "query" / "images" /
                                    spe::wire::frame_name(i + 1));
      if (mode == "skip-last" && last) break;
      spe::Mask pred = consensus;
      if (mode == "copy-query")
        pred = spe::png::read_image(query_path) > 0.5f;
      spe::png::write_mask(
          workdir / "out" / "predictions" / spe::wire::frame_name(i), pred);
    }
  } catch (const std::exception& e) {
    std::cerr << "echo plugin error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
