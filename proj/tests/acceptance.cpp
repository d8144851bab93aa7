// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <selberg_lab/commands.hpp>

using namespace selberg_lab;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail)
{
    std::printf("[%s] criterion %2d  %-28s %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    if (!pass)
        ++failures;
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

BalancedSequence balanced_d3(std::int64_t N, std::int64_t H)
{
    const auto t = sieve_dk(static_cast<std::uint64_t>(N - H + 1), static_cast<std::uint64_t>(2 * N + H), 3);
    return balanced_sequence(t, residue_polynomial(3, StieltjesConstants::standard()), N, H);
}

void sieve_correctness()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::int64_t mismatches = 0;
    for (int k : {2, 3}) {
        std::vector<std::uint64_t> count(10'001, 0);
        for (std::uint64_t a = 1; a <= 10'000; ++a)
            for (std::uint64_t b = 1; a * b <= 10'000; ++b) {
                if (k == 2)
                    ++count[a * b];
                else
                    for (std::uint64_t c = 1; a * b * c <= 10'000; ++c)
                        ++count[a * b * c];
            }
        const auto s = sieve_dk(1, 10'000, k);
        for (std::uint64_t n = 1; n <= 10'000; ++n)
            mismatches += s.values[n - 1] != count[n];
    }
    const double secs = seconds_since(t0);
    report(1, "sieve correctness", mismatches == 0 && secs < 5.0, fmt("mismatches=%lld time=%.3fs (limit 5s)", (long long)mismatches, secs));
}

void residue_polynomial_check()
{
    using Big = boost::multiprecision::cpp_bin_float_50;
    const Big g0(std::string(StieltjesConstants::decimal[0]));
    const Big g1(std::string(StieltjesConstants::decimal[1]));
    const Big g2(std::string(StieltjesConstants::decimal[2]));
    // truncated Laurent series of (w zeta(1+w))^3 e^{Lw}, coefficient of w^2
    const std::vector<Big> s{1, g0, -g1, g2 / 2};
    std::vector<Big> sq(4, 0), cube(4, 0);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; i + j < 4; ++j)
            sq[i + j] += s[i] * s[j];
    for (int i = 0; i < 4; ++i)
        for (int j = 0; i + j < 4; ++j)
            cube[i + j] += sq[i] * s[j];
    const std::vector<double> expected{static_cast<double>(cube[2]), static_cast<double>(cube[1]), static_cast<double>(cube[0] / 2)};
    const auto p = residue_polynomial(3, StieltjesConstants::standard());
    double worst = 0;
    for (int j = 0; j < 3; ++j)
        worst = std::max(worst, std::abs(p.coeffs[j] - expected[j]) / std::abs(expected[j]));

    const std::uint64_t X = 10'000'000;
    const auto t = sieve_dk(1, X, 3);
    long double sum = 0;
    for (auto v : t.values)
        sum += static_cast<long double>(v);
    // I_j = int_1^X (log t)^j dt = X L^j - j I_{j-1}, I_0 = X - 1
    const long double L = std::log(static_cast<long double>(X));
    long double I = X - 1.0L, main = p.coeffs[0] * I;
    for (int j = 1; j < 3; ++j) {
        I = static_cast<long double>(X) * std::pow(L, j) - j * I;
        main += p.coeffs[static_cast<std::size_t>(j)] * I;
    }
    const double gap = static_cast<double>(std::abs(sum - main) / sum);
    report(2, "residue polynomial", worst <= 1e-12 && gap < 0.01,
           fmt("coeff rel err=%.2e (limit 1e-12) mass gap at 1e7=%.3e (limit 1e-2)", worst, gap));
}

void integral_oracles()
{
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0;
    for (std::int64_t N : {250, 1000, 4000})
        for (std::int64_t H : {5, 10, 30}) {
            const auto f = balanced_d3(N, H);
            for (bool tilde : {false, true}) {
                const double s = tilde ? balanced_modified_selberg_integral(f, N, H, Method::sliding)
                                       : balanced_selberg_integral(f, N, H, Method::sliding);
                const double b = tilde ? balanced_modified_selberg_integral(f, N, H, Method::brute)
                                       : balanced_selberg_integral(f, N, H, Method::brute);
                worst = std::max(worst, relative_difference(s, b));
            }
            const auto g = BalancedSequence::from_values(N, H, detail::random_signal(static_cast<std::size_t>(N + 2 * H), 1000 + N + H, true));
            const IntegralOptions slide{Method::sliding, MeanMode::residue, 1};
            const IntegralOptions brute{Method::brute, MeanMode::residue, 1};
            worst = std::max(worst, relative_difference(selberg_integral(g, N, H, LogPolynomial::zero(), slide),
                                                        selberg_integral(g, N, H, LogPolynomial::zero(), brute)));
            worst = std::max(worst, relative_difference(modified_selberg_integral(g, N, H, LogPolynomial::zero(), slide),
                                                        modified_selberg_integral(g, N, H, LogPolynomial::zero(), brute)));
        }
    const double secs = seconds_since(t0);
    report(3, "integral oracle equivalence", worst <= 1e-9 && secs < 10.0, fmt("max rel diff=%.2e (limit 1e-9) time=%.3fs (limit 10s)", worst, secs));
}

void correlation_identities()
{
    double worst_energy = 0, worst_fft = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::uint64_t st = seed;
        const std::size_t len = 16 + detail::splitmix(st) % 497;
        const auto f = detail::random_signal(len, seed * 7919);
        const std::int64_t H = 1 + static_cast<std::int64_t>(detail::splitmix(st) % 40);
        for (auto w : {EnergyWeight::box2, EnergyWeight::fejer2}) {
            const double corr = f_hat_energy_weighted(f, w, H);
            const double quad = grid_weighted_energy(f, w, H, std::size_t{1} << 20);
            worst_energy = std::max(worst_energy, relative_difference(corr, quad));
        }
        const auto g = detail::random_signal(len, seed * 104729 + 1);
        const std::int64_t hmax = static_cast<std::int64_t>(len) - 1;
        const auto d = cross_correlation({f, 0}, {g, 3}, hmax, CorrelationMethod::direct);
        const auto q = cross_correlation({f, 0}, {g, 3}, hmax, CorrelationMethod::fft);
        double sf = 0, sg = 0;
        for (std::size_t i = 0; i < len; ++i) {
            sf += f[i] * f[i];
            sg += g[i] * g[i];
        }
        const double scale = std::sqrt(sf * sg);
        for (std::int64_t h = -hmax; h <= hmax; ++h)
            worst_fft = std::max(worst_fft, std::abs(d.at(h) - q.at(h)) / std::max(std::abs(d.at(h)), scale));
    }
    report(4, "correlation identities", worst_energy <= 1e-6 && worst_fft <= 1e-9,
           fmt("energy vs 2^20 quadrature=%.2e (limit 1e-6) fft vs direct=%.2e (limit 1e-9)", worst_energy, worst_fft));
}

void lemma1_scaling()
{
    const std::int64_t N = 100'000;
    const auto f = balanced_d3(N, 80);
    std::vector<double> xs, ys;
    double worst = 0;
    std::string detail;
    for (std::int64_t H : {10, 20, 40, 80}) {
        const auto r = lemma1_check(f, N, H);
        worst = std::max(worst, r.diff_normalized);
        detail += fmt("H=%lld:%.1f ", (long long)H, r.diff_normalized);
        xs.push_back(std::log(static_cast<double>(H)));
        ys.push_back(std::log(std::max(r.diff, 1e-300)));
    }
    double xb = 0, yb = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xb += xs[i] / xs.size();
        yb += ys[i] / ys.size();
    }
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - xb) * (xs[i] - xb);
        sxy += (xs[i] - xb) * (ys[i] - yb);
    }
    const double slope = sxy / sxx;
    report(5, "lemma-1 discrepancy scaling", worst <= 50.0 && slope <= 3.5,
           fmt("diff/H^3 %s(limit 50) slope=%.3f (limit 3.5)", detail.c_str(), slope));
}

void star_inequality()
{
    std::int64_t violations = 0;
    for (std::int64_t H : {100, 1000})
        for (double eps : {0.1, 0.01})
            violations += star_check(H, eps, 1'000'000).violations;
    report(6, "inequality (*)", violations == 0, fmt("violations=%lld over 4 grids of 1e6 points", (long long)violations));
}

void gallagher_grid()
{
    double worst = 0, worst_growth = 0;
    std::string detail;
    for (std::int64_t h : {10, 20, 40}) {
        double first = 0, last = 0;
        for (std::int64_t N : {10'000, 20'000, 40'000}) {
            const auto f = balanced_d3(N, h);
            const double ratio = gallagher_check(f, N, h).ratio;
            worst = std::max(worst, ratio);
            if (N == 10'000)
                first = ratio;
            last = ratio;
        }
        // growth from N = 10^4 to 4*10^4 against (4)^{0.1}
        const double growth = (last / first) / std::pow(4.0, 0.1);
        worst_growth = std::max(worst_growth, growth);
        detail += fmt("h=%lld:%.2f->%.2f ", (long long)h, first, last);
    }
    report(7, "modified Gallagher", worst <= 100.0 && worst_growth <= 1.0,
           fmt("%smax ratio=%.2f (limit 100) growth/4^0.1=%.3f (limit 1)", detail.c_str(), worst, worst_growth));
}

void exponent_algebra()
{
    bool ok = exponent_map(Rational(0)) == Rational(6, 5);
    for (int i = 0; i < 10; ++i)
        ok = ok && balance_check(Rational(i, 10));
    double worst = 0;
    std::uint64_t st = 2024;
    for (int i = 0; i < 100; ++i) {
        const Rational A(static_cast<std::int64_t>(detail::splitmix(st) % 1000), 1000);
        const auto H = static_cast<std::int64_t>(2 + detail::splitmix(st) % 100'000'000);
        const auto p = optimal_eps_E(A, H);
        worst = std::max({worst, relative_difference(p.terms[0], p.terms[1]), relative_difference(p.terms[0], p.terms[2])});
    }
    report(8, "exponent algebra", ok && worst <= 1e-12, fmt("exact identities %s, term spread=%.2e (limit 1e-12)", ok ? "hold" : "FAIL", worst));
}

void three_range()
{
    const std::int64_t N = 4000, H = 25;
    const auto f = balanced_d3(N, H);
    const auto p = optimal_eps_E(Rational(0), H);
    const auto r = three_range_split(f, N, H, p.eps, p.E);
    const bool pass = r.majorization_violations == 0 && r.slack >= 1.0 - 1e-3 && r.slack <= 4.0;
    report(9, "three-range majorization", pass,
           fmt("slack=%.4f (limit [0.999, 4]) violations=%lld T1=%.4g T2=%.4g T3=%.4g H^3=%.4g J=%.4g", r.slack,
               (long long)r.majorization_violations, r.T1, r.T2, r.T3, std::pow(25.0, 3), r.J_direct));
}

void empirical_ratios()
{
    bool positive = true, identical = true;
    std::string detail;
    const auto poly = residue_polynomial(3, StieltjesConstants::standard());
    for (std::int64_t N : {100'000, 1'000'000}) {
        const auto H = static_cast<std::int64_t>(std::floor(std::pow(static_cast<double>(N), 0.25)));
        const auto f = balanced_d3(N, H);
        const auto a = integral_report(f, N, H, poly);
        const auto b = integral_report(f, N, H, poly);
        identical = identical && to_csv_row(a) == to_csv_row(b);
        positive = positive && a.lower_ratio > 0.0;
        detail += fmt("N=%lld H=%lld lower=%.3f conj=%.3f ", (long long)N, (long long)H, a.lower_ratio, a.ratio_J_tilde);
    }
    RunConfig cfg;
    cfg.N_list = {1 << 20};
    cfg.H_list = {64, 128, 256, 512};
    const auto fit1 = cmd_fit(cfg);
    const auto fit2 = cmd_fit(cfg);
    identical = identical && fit1.exit_code == 0 && fit1.output == fit2.output;
    double A_hat = std::nan("");
    if (fit1.exit_code == 0)
        A_hat = nlohmann::json::parse(fit1.output)["A_hat"].get<double>();
    report(10, "empirical ratios", positive && identical, fmt("%sA_hat=%.4f reruns %s", detail.c_str(), A_hat, identical ? "identical" : "DIFFER"));
}

void determinism()
{
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "selberg_lab_acceptance";
    fs::remove_all(dir);
    auto run = [&](unsigned threads, const char* sub) {
        RunConfig cfg;
        cfg.N_list = {10'000, 50'000};
        cfg.H_list = {10, 20};
        cfg.threads = threads;
        cfg.cache_dir = (dir / sub).string();
        std::string out;
        const auto s = cmd_sieve(cfg);
        std::ifstream is(cache_path(cfg.cache_dir, 3, 50'000 - 20 + 1, 50'040), std::ios::binary);
        std::stringstream file;
        file << is.rdbuf();
        out += s.output + file.str();
        out += cmd_selberg(cfg).output;
        cfg.out_format = OutFormat::json;
        out += cmd_selberg(cfg).output;
        out += cmd_fit(cfg).output;
        RunConfig v;
        v.threads = threads;
        out += cmd_verify(v).output;
        return out;
    };
    const auto a = run(1, "a");
    const auto b = run(1, "b");
    const auto c = run(4, "c");
    fs::remove_all(dir);
    report(11, "determinism", a == b && a == c, fmt("sieve/selberg/fit/verify outputs: rerun %s, threads 1 vs 4 %s", a == b ? "identical" : "DIFFER",
                                                    a == c ? "identical" : "DIFFER"));
}

} // namespace

int main()
{
    sieve_correctness();
    residue_polynomial_check();
    integral_oracles();
    correlation_identities();
    lemma1_scaling();
    star_inequality();
    gallagher_grid();
    exponent_algebra();
    three_range();
    empirical_ratios();
    determinism();
    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
