// Acceptance suite. Prints one PASS/FAIL line per criterion. Exit status is 0
// when every criterion ran to completion; with --strict any FAIL is nonzero.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cli.hpp"
#include "ltvid/admm.hpp"
#include "ltvid/diagnostics.hpp"
#include "ltvid/generators.hpp"
#include "ltvid/io.hpp"
#include "ltvid/kalman.hpp"
#include "ltvid/lti.hpp"
#include "ltvid/segmentation.hpp"
#include "oracles.hpp"

using namespace ltvid;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
    bool pass = false;
    std::string detail;
};

// 1. Smoother equals the dense closed form.
Verdict smoother_closed_form() {
    double worst = 0.0, slowest = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto prob = oracle::random_problem(1000 + seed, 2, 1, 30);
        const double lambda = std::pow(10.0, static_cast<double>(seed % 5) - 2.0);
        const auto start = Clock::now();
        const auto slow = fit_slow(prob, lambda).parameters.coefficients;
        const auto smooth = fit_smooth(prob, lambda).parameters.coefficients;
        slowest = std::max(slowest, seconds_since(start));
        worst = std::max({worst,
                          oracle::relative_error(slow, oracle::closed_form(prob, oracle::difference(1), lambda)),
                          oracle::relative_error(smooth, oracle::closed_form(prob, oracle::difference(2), lambda))});
    }
    return {worst <= 1e-6 && slowest < 1.0,
            fmt::format("max relative error {:.2e} (tol 1e-6), slowest instance {:.3f} s", worst, slowest)};
}

// 2. Jump-linear reproduction.
Verdict jump_linear() {
    int one_knot = 0, params = 0;
    double slowest = 0.0;
    std::vector<std::string> misses;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto spec = JumpLinearSpec::standard();
        spec.seed = seed;
        const auto data = generate_jump_linear(spec);
        const auto start = Clock::now();
        const auto prob = build_regressor(data.recorded);
        const RegularizerSpec reg{1, Norm::Group, 1.0, std::nullopt};
        const auto lc = lcurve_sweep(prob, reg, default_lambda_grid(prob));
        const auto fit = fit_pwconstant(prob, lc.selected_lambda);
        const auto knots = detect_knots_relative(fit.parameters, 1, 0.1);
        const auto refined = refine(prob, knots);
        slowest = std::max(slowest, seconds_since(start));
        const bool ok_knot = knots.size() == 1 && std::abs(knots[0] - spec.switch_time) <= 5;
        const double err =
            (refined.parameters().coefficients - data.truth.coefficients).cwiseAbs().maxCoeff();
        one_knot += ok_knot;
        params += err <= 0.1;
        if (!ok_knot || err > 0.1) {
            std::string ks;
            for (Index k : knots) ks += (ks.empty() ? "" : ",") + std::to_string(k);
            misses.push_back(fmt::format("seed {}: knots [{}] err {:.3f}", seed,
                                         knots.size() > 6 ? std::to_string(knots.size()) + " knots" : ks,
                                         err));
        }
    }
    std::string detail = fmt::format(
        "one knot within +-5 of 200: {}/20, parameters within 0.1: {}/20 (need 18/20 each), "
        "slowest seed {:.2f} s",
        one_knot, params, slowest);
    for (const auto& m : misses) detail += "\n      " + m;
    return {one_knot >= 18 && params >= 18 && slowest < 30.0, detail};
}

// 3. DP equals brute force.
Verdict dp_exact() {
    const auto start = Clock::now();
    int agree = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const Index n = 1 + static_cast<Index>(seed % 2);
        const Index m = static_cast<Index>((seed / 2) % 2);
        const Index T = 20 + static_cast<Index>(seed % 21);
        const Index M = static_cast<Index>(seed % 3);
        const auto prob = oracle::random_problem(3000 + seed, n, m, T, 0.3);
        const auto dp = fit_dp_segments(prob, M);
        const auto brute = oracle::enumerate_segmentations(prob, M, n + m);
        const double cost = dp.total_loss();
        agree += dp.breakpoints == brute.breakpoints ||
                 std::abs(cost - brute.cost) <= 1e-10 * std::max(1.0, brute.cost);
    }
    const double elapsed = seconds_since(start);
    return {agree == 50 && elapsed < 10.0,
            fmt::format("{}/50 agree with enumeration, {:.2f} s total", agree, elapsed)};
}

// 4. ADMM objective matches a primal-dual oracle.
Verdict admm_optimal() {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto prob = oracle::random_problem(4000 + seed, 2, 1, 40, 0.2);
        const double lambda = 0.5;
        for (int d : {1, 2}) {
            const auto fit = d == 1 ? fit_pwconstant(prob, lambda) : fit_pwlinear(prob, lambda);
            const double ours =
                oracle::sparse_objective(prob, fit.parameters.coefficients, d, true, lambda);
            const double ref = oracle::sparse_objective(
                prob, oracle::primal_dual(prob, d, true, lambda, 100000), d, true, lambda);
            worst = std::max(worst, std::abs(ours - ref) / ref);
        }
    }
    return {worst <= 1e-4, fmt::format("max relative objective gap {:.2e} (tol 1e-4)", worst)};
}

// 5. Difference polynomials reproduce the slow and smooth fits.
Verdict polynomial() {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto prob = oracle::random_problem(5000 + seed, 2, 1, 30);
        const double lambda = 0.3 * static_cast<double>(seed);
        const auto p1 = fit_polynomial_regularizer(prob, {1.0, -1.0}, lambda).coefficients;
        const auto p2 = fit_polynomial_regularizer(prob, {1.0, -2.0, 1.0}, lambda).coefficients;
        worst = std::max({worst, (p1 - fit_slow(prob, lambda).parameters.coefficients).cwiseAbs().maxCoeff(),
                          (p2 - fit_smooth(prob, lambda).parameters.coefficients).cwiseAbs().maxCoeff()});
    }
    bool rejected = false;
    try {
        fit_polynomial_regularizer(oracle::random_problem(5100, 2, 1, 30), {1.0, -0.5}, 1.0);
    } catch (const InvalidRegularizerError&) {
        rejected = true;
    }
    return {worst <= 1e-8 && rejected,
            fmt::format("max abs difference {:.2e} (tol 1e-8), P(1) != 0 rejected: {}", worst,
                        rejected ? "yes" : "no")};
}

// 6. Prior fusion.
Verdict prior_fusion() {
    std::mt19937_64 rng(6);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Index k = 1 + trial % 6;
        VectorXd mean = oracle::gaussian(rng, k, 1);
        MatrixXd cov = oracle::random_spd(rng, k);
        const VectorXd mu = oracle::gaussian(rng, k, 1);
        const MatrixXd S = oracle::random_spd(rng, k);
        const auto [m_ref, P_ref] = oracle::information_fusion(mean, cov, mu, S);
        correct(mean, cov, MatrixXd::Identity(k, k), S, mu);
        worst = std::max({worst, oracle::relative_error(mean, m_ref),
                          oracle::relative_error(cov, P_ref)});
    }
    const auto prob = oracle::random_problem(6000, 2, 1, 20);
    const Index K = prob.K(), N = prob.steps();
    GaussianPrior vague;
    vague.steps.resize(N);
    for (Index t = 0; t < N; ++t)
        vague.steps[t] = PriorStep{VectorXd::Constant(K, 3.0), 1e12 * MatrixXd::Identity(K, K)};
    const double vague_gap = oracle::relative_error(
        fit_slow(prob, 1.0, std::nullopt, vague).parameters.coefficients,
        fit_slow(prob, 1.0).parameters.coefficients);
    GaussianPrior dogmatic;
    dogmatic.steps.resize(N);
    const VectorXd target = VectorXd::LinSpaced(K, -1.0, 1.0);
    dogmatic.steps[7] = PriorStep{target, 1e-12 * MatrixXd::Identity(K, K)};
    const double pinned =
        (fit_slow(prob, 1.0, std::nullopt, dogmatic).parameters.at(7) - target).norm();
    return {worst <= 1e-10 && vague_gap <= 1e-8 && pinned <= 1e-6,
            fmt::format("fusion max relative error {:.2e} (tol 1e-10), uninformative change {:.2e}, "
                        "dogmatic offset {:.2e}",
                        worst, vague_gap, pinned)};
}

bool hessian_definite(const RegressorProblem& prob, int order) {
    const MatrixXd H = oracle::regularized_hessian(prob, order, 1.0);
    const VectorXd ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(H).eigenvalues();
    return ev.minCoeff() > 1e-9 * ev.maxCoeff();
}

// 7. Well-posedness verdict equals definiteness of the dense Hessian.
Verdict well_posed() {
    int match = 0, deficient_seen = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(7000 + seed);
        const int order = 1 + static_cast<int>(seed % 2);
        RegressorProblem prob = oracle::random_problem(7000 + seed, 2, 1, 30);
        if (seed > 10) {
            const Index N = 40;
            MatrixXd phi;
            MatrixXd y;
            if (order == 1 || seed % 4 == 0) {
                // Collinear regressor rows.
                phi = oracle::gaussian(rng, 3, N);
                phi.row(2) = 0.5 * phi.row(0) - phi.row(1);
                y = oracle::gaussian(rng, 2, N);
            } else {
                // phi_t = a_t (1, -t) hides k_t = (t, 1) b.
                phi.resize(2, N);
                for (Index t = 0; t < N; ++t) {
                    const double a = oracle::gaussian(rng, 1, 1)(0);
                    phi.col(t) << a, -a * static_cast<double>(t);
                }
                y = oracle::gaussian(rng, 1, N);
            }
            prob = RegressorProblem(y, phi);
        }
        const bool verdict =
            !well_posedness(prob, {order, Norm::Squared, 1.0, std::nullopt}).deficient;
        const bool definite = hessian_definite(prob, order);
        match += verdict == definite;
        deficient_seen += !definite;
    }
    return {match == 20 && deficient_seen == 10,
            fmt::format("{}/20 verdicts match the Hessian, {} deficient instances", match,
                        deficient_seen)};
}

// 8. Large-lambda and zero-breakpoint limits.
Verdict lambda_limits() {
    const auto prob = oracle::random_problem(8000, 2, 1, 40, 0.3);
    const auto lti = fit_lti(prob);
    const auto broadcast =
        ParameterTrajectory::broadcast(lti.parameters(), prob.n(), prob.m(), prob.steps());
    const double pw = (fit_pwconstant(prob, 1e6).parameters.coefficients - broadcast.coefficients)
                          .cwiseAbs()
                          .maxCoeff();
    const double slow =
        (fit_slow(prob, 1e6).parameters.coefficients - broadcast.coefficients).cwiseAbs().maxCoeff();

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "ltvid_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto spec = JumpLinearSpec::standard();
    spec.length = 120;
    spec.switch_time = 60;
    io::write_trajectory_csv(dir / "d.csv", generate_jump_linear(spec).recorded);
    std::ostringstream out, err;
    const std::string input = (dir / "d.csv").string(), outdir = (dir / "dp").string();
    const char* argv[] = {"ltvid", "fit", "-i", input.c_str(), "--method", "dp",
                          "--segments", "0", "-o", outdir.c_str()};
    const int status = cli::run(10, argv, out, err);
    double dp = std::numeric_limits<double>::infinity();
    if (status == 0) {
        const auto model = io::model_from_json(io::read_json(dir / "dp" / "model.json"));
        const auto ref = fit_lti(build_regressor(io::read_trajectory_csv(dir / "d.csv")));
        dp = 0.0;
        for (Index t = 0; t < model.steps(); ++t) {
            dp = std::max({dp, (model.A[t] - ref.A).cwiseAbs().maxCoeff(),
                           (model.B[t] - ref.B).cwiseAbs().maxCoeff()});
        }
    }
    fs::remove_all(dir);
    return {pw <= 1e-3 && slow <= 1e-3 && dp <= 1e-10,
            fmt::format("pwconstant {:.2e}, slow {:.2e} (tol 1e-3); dp --segments 0 vs lti {:.2e} "
                        "(tol 1e-10)",
                        pw, slow, dp)};
}

}  // namespace

int main(int argc, char** argv) {
    const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"1 smoother vs closed form", smoother_closed_form},
        {"2 jump-linear reproduction", jump_linear},
        {"3 dp exactness", dp_exact},
        {"4 admm optimality", admm_optimal},
        {"5 polynomial regularizer", polynomial},
        {"6 prior fusion", prior_fusion},
        {"7 well-posedness biconditional", well_posed},
        {"8 lambda limits", lambda_limits},
    };
    int failed = 0, crashed = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
            ++crashed;
        }
        failed += !v.pass;
        std::printf("%s  %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("EXCLUDED  9 robot contact and RL figures: need external simulators\n");
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
                criteria.size());
    if (crashed > 0) return 2;
    return strict && failed > 0 ? 1 : 0;
}
