// Wire-protocol oracle used by the transport tests.
#include <CLI11.hpp>

#include <iostream>
#include <unistd.h>

#include "segrmt/error.hpp"
#include "segrmt/oracle.hpp"
#include "segrmt/remote.hpp"

namespace {

using namespace segrmt;

class ZeroModel final : public SegmentationOracle {
 public:
  LabelMap segment(const Image& img) const override { return LabelMap(img.height(), img.width(), 0); }
  std::string descriptor() const override { return "zero"; }
};

class FailingModel final : public SegmentationOracle {
 public:
  LabelMap segment(const Image&) const override { throw std::runtime_error("model exploded"); }
  std::string descriptor() const override { return "fail"; }
};

// Replies with a label map one row short.
class WrongShapeModel final : public SegmentationOracle {
 public:
  LabelMap segment(const Image& img) const override {
    return LabelMap(img.height() > 1 ? img.height() - 1 : 2, img.width(), 0);
  }
  std::string descriptor() const override { return "wrong-shape"; }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Test oracle speaking the segrmt wire protocol"};
  std::string model = "palette";
  std::string transport = "stdio";
  std::uint16_t port = 0;
  std::size_t max_connections = 0;
  app.add_option("--model", model, "palette, zero, fail or wrong-shape");
  app.add_option("--transport", transport, "stdio or tcp");
  app.add_option("--port", port, "TCP port, 0 for any");
  app.add_option("--max-connections", max_connections, "Exit after serving this many connections");
  CLI11_PARSE(app, argc, argv);

  std::unique_ptr<SegmentationOracle> oracle;
  if (model == "palette") oracle = std::make_unique<PaletteSegmenter>(PaletteSegmenter::builtin());
  else if (model == "zero") oracle = std::make_unique<ZeroModel>();
  else if (model == "fail") oracle = std::make_unique<FailingModel>();
  else if (model == "wrong-shape") oracle = std::make_unique<WrongShapeModel>();
  else {
    std::cerr << "unknown model " << model << '\n';
    return 1;
  }

  if (transport == "stdio") {
    serve_stream(STDIN_FILENO, STDOUT_FILENO, *oracle);
    return 0;
  }
  if (transport == "tcp") {
    serve_tcp(port, *oracle, [](std::uint16_t p) { std::cout << p << std::endl; }, max_connections);
    return 0;
  }
  std::cerr << "unknown transport " << transport << '\n';
  return 1;
}
