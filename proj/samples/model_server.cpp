// Toy model endpoint for the hiring sample, for trying the http_endpoint
// model source:
//
//   model_server [port]      (default 8090)
//   faith audit --config samples/hiring/http_config.json --data samples/hiring/audit_nopred.csv
//
// POST /predict {"instances": [[gender, experience, degree], ...]}
//   -> {"predictions": ["0" | "1", ...]}

#include <iostream>
#include <string>

#include "httplib.h"
#include "json.hpp"

namespace {

// Same rule that produced the sample's prediction column: men get credit for
// a bachelor's degree two years earlier than women do.
std::string hire(const nlohmann::json& x) {
  const std::string gender = x.at(0);
  const double experience = x.at(1);
  const std::string degree = x.at(2);
  if (experience >= 5 || degree == "msc") return "1";
  if (gender == "m" && experience >= 2 && degree == "bsc") return "1";
  return "0";
}

}  // namespace

int main(int argc, char** argv) {
  const int port = argc > 1 ? std::stoi(argv[1]) : 8090;
  httplib::Server server;
  server.Post("/predict", [](const httplib::Request& req, httplib::Response& res) {
    try {
      auto body = nlohmann::json::parse(req.body);
      nlohmann::json out;
      out["predictions"] = nlohmann::json::array();
      for (const auto& x : body.at("instances")) out["predictions"].push_back(hire(x));
      res.set_content(out.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(std::string("{\"error\": \"") + e.what() + "\"}", "application/json");
    }
  });
  std::cout << "listening on http://127.0.0.1:" << port << "/predict\n" << std::flush;
  return server.listen("127.0.0.1", port) ? 0 : 1;
}
