// Writes the weight files referenced by configs/. The controllers are
// constructed, not trained: each network linearizes to a discrete LQR gain.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "roacert/json_io.hpp"
#include "roacert/scenarios.hpp"
#include "roacert/synth.hpp"

using namespace roacert;

namespace {

NeuralNetwork scalar_net(double w1, double w2) {
  return NeuralNetwork({{MatrixXd::Constant(1, 1, w1), VectorXd::Zero(1), Activation::tanh()}}, MatrixXd::Constant(1, 1, w2),
                       VectorXd::Zero(1));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate demo controller weights"};
  std::string dir = "configs/weights";
  app.add_option("--out-dir", dir, "output directory");
  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(dir);
    auto put = [&](const std::string& name, const NeuralNetwork& nn) {
      const auto path = std::filesystem::path(dir) / name;
      write_text_file(path.string(), network_to_json(nn).dump(2) + "\n");
      std::cout << path.string() << "\n";
    };

    put("scalar_stable.json", scalar_net(0.1, -1.0));
    put("scalar_uncontrolled.json", scalar_net(0.1, 0.0));

    const double dt = 0.1;
    MatrixXd A(2, 2), B(2, 1);
    A << 1, dt, 0, 1;
    B << 0.5 * dt * dt, dt;
    SynthOptions di;
    di.widths = {8};
    di.first_layer_scale = 0.5;
    put("double_integrator.json", lqr_like_network(A, B, di));

    const LtiPlant pend = pendulum_linearized(PendulumParams{});
    SynthOptions ps;
    ps.widths = {8};
    ps.first_layer_scale = 0.5;
    put("pendulum.json", lqr_like_network(pend.A, pend.B(), ps));

    const LtiPlant veh = vehicle_linearized(VehicleParams{});
    SynthOptions vs;
    vs.widths = {8};
    vs.first_layer_scale = 0.5;
    vs.gain_alignment = 3.0;
    put("vehicle.json", lqr_like_network(veh.A, veh.B(), vs));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
