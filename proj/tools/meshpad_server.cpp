// HTTP session server. Data directory comes from MESHPAD_DATA_DIR.
#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "meshpad/obj_io.hpp"
#include "meshpad/service.hpp"

int main(int argc, char** argv) {
  CLI::App app{"meshpad HTTP session server"};
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string backend = "oracle";
  std::string fixture, model, speculator;
  int bins = meshpad::kDefaultBins;
  bool speculate = false;
  app.add_option("--port", port, "listen port")->check(CLI::Range(1, 65535));
  app.add_option("--host", host, "listen address");
  app.add_option("--bins", bins, "quantization bins")->check(CLI::Range(2, 65000));
  app.add_option("--backend", backend, "addition backend")->check(CLI::IsMember({"oracle", "counting"}));
  app.add_option("--fixture", fixture, "oracle target OBJ")->check(CLI::ExistingFile);
  app.add_option("--model", model, "counting model file")->check(CLI::ExistingFile);
  app.add_option("--speculator", speculator, "counting speculator file")->check(CLI::ExistingFile);
  app.add_flag("--speculate", speculate, "decode with the vertex speculator");
  CLI11_PARSE(app, argc, argv);

  try {
    meshpad::service::ServiceConfig cfg;
    cfg.bins = bins;
    cfg.decode.speculate = speculate;
    const char* dir = std::getenv("MESHPAD_DATA_DIR");
    cfg.data_dir = dir && *dir ? dir : "meshpad_data";
    if (backend == "oracle") {
      if (fixture.empty()) {
        std::cerr << "warning: oracle backend without --fixture; additions will be rejected\n";
      } else {
        cfg.backend = std::make_shared<meshpad::service::OracleBackend>(
            meshpad::quantize(meshpad::normalize_to_unit_cube(meshpad::load_obj(fixture)), bins));
      }
    } else {
      if (model.empty()) throw meshpad::Error("--backend counting needs --model");
      auto m = std::make_shared<meshpad::CountingModel>(meshpad::CountingModel::load(model));
      std::shared_ptr<meshpad::CountingSpeculator> s;
      if (!speculator.empty()) s = std::make_shared<meshpad::CountingSpeculator>(meshpad::CountingSpeculator::load(speculator));
      cfg.backend = std::make_shared<meshpad::service::CountingBackend>(m, s);
    }
    meshpad::service::SessionStore store(cfg);
    httplib::Server server;
    meshpad::service::install_routes(server, store);
    std::cerr << "listening on " << host << ":" << port << ", data in " << cfg.data_dir << "\n";
    if (!server.listen(host, port)) {
      std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
