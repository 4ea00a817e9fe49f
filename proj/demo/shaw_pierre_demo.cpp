// Two-mass oscillator: backbone coefficient, isola threshold and FRC topology on either side of it.
// Usage: ssmr-demo [system.json]

#include <cstdio>
#include <memory>
#include <string>

#include "ssmr/ssmr.hpp"

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : SSMR_SAMPLE_DIR "/shaw_pierre.json";
  try {
    const auto sys = ssmr::load_system(path);
    auto mm = std::make_shared<const ssmr::ModalModel>(ssmr::modal_decompose(ssmr::to_first_order(sys)));
    const ssmr::ReducedModel model(mm, 3, 0);
    const auto& ssm = model.autonomous();
    std::printf("lambda_1 = %.6f %+.6fi\n", ssm.lambda1.real(), ssm.lambda1.imag());
    std::printf("gamma_1  = %.6f %+.6fi\n", ssm.gamma[0].real(), ssm.gamma[0].imag());

    const auto li = ssmr::leading_isola(ssm, model.c00(), 0.0);
    if (!li.exists) {
      std::printf("no positive root of a(rho): no isola at leading order\n");
      return 0;
    }
    std::printf("rho_1 = %.6f, isola merges at eps_m = %.6g\n", li.rho1, li.eps_m);

    for (const double eps : {0.9 * li.eps_m, 1.1 * li.eps_m}) {
      ssmr::FrcOptions opt;
      opt.eps = eps;
      opt.rho_max = 0.3;
      const auto curve = ssmr::trace_frc(model, opt);
      std::printf("eps = %.6g: %zu component(s), %zu fold(s)\n", eps, curve.num_components, curve.folds.size());
    }
  } catch (const ssmr::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return ssmr::exit_code(e.kind());
  }
  return 0;
}
