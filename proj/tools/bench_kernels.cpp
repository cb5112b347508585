// Times the OpenMP kernels against their serial references and checks that
// both paths agree.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ipdc/report_io.hpp"
#include "ipdc/screening.hpp"
#include "ipdc/simulation.hpp"

namespace {

template <class F>
double seconds(F&& f)
{
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

int main(int argc, char** argv)
{
    const ipdc::Index n = argc > 1 ? std::atol(argv[1]) : 200;
    const ipdc::Index p = argc > 2 ? std::atol(argv[2]) : 2000;
    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::printf("threads=%d n=%ld p=%ld\n", threads, static_cast<long>(n), static_cast<long>(p));

    auto spec = ipdc::SimModelSpec::for_model(5);
    spec.n = n;
    spec.p = p;
    const auto draw = ipdc::gen_model(spec, 0);

    ipdc::Utilities serial, parallel;
    const double ts = seconds([&] { serial = ipdc::compute_utilities_serial(draw.train); });
    const double tp = seconds([&] { parallel = ipdc::compute_utilities(draw.train); });
    const bool same = serial.omega_main == parallel.omega_main && serial.omega_inter == parallel.omega_inter;
    std::printf("utilities   serial %.3fs  openmp %.3fs  speedup %.2fx  identical=%s\n", ts, tp, ts / tp,
                same ? "yes" : "no");

    auto mc = ipdc::SimModelSpec::for_model(3);
    mc.n = n;
    mc.p = std::min<ipdc::Index>(p, 500);
    mc.replicates = 8;
    mc.test_n = 1000;
    ipdc::SimOptions seq;
    seq.parallel = false;
    ipdc::SimOptions par;
    ipdc::SimReport rs, rp;
    const std::vector<std::string> methods{"ipdc", "sis2"};
    const double ms = seconds([&] { rs = ipdc::run_monte_carlo(mc, methods, seq); });
    const double mp = seconds([&] { rp = ipdc::run_monte_carlo(mc, methods, par); });
    const bool mc_same = ipdc::sim_report_csv(rs) == ipdc::sim_report_csv(rp);
    std::printf("monte carlo serial %.3fs  openmp %.3fs  speedup %.2fx  identical=%s\n", ms, mp, ms / mp,
                mc_same ? "yes" : "no");
    return same && mc_same ? 0 : 1;
}
