#include "gffdrift/gff_environment.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <random>

#include <fftw3.h>

#include "gffdrift/errors.hpp"
#include "gffdrift/quadrature.hpp"
#include "gffdrift/rng.hpp"

namespace gffdrift {

namespace {

constexpr double kPi = std::numbers::pi;

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Keys cubic convolution weights (a = -1/2) for offsets -1, 0, 1, 2.
inline void keys_weights(double t, double w[4]) {
    const double t2 = t * t, t3 = t2 * t;
    w[0] = -0.5 * t3 + t2 - 0.5 * t;
    w[1] = 1.5 * t3 - 2.5 * t2 + 1.0;
    w[2] = -1.5 * t3 + 2.0 * t2 + 0.5 * t;
    w[3] = 0.5 * t3 - 0.5 * t2;
}

inline int signed_index(int i, int N) { return i <= N / 2 ? i : i - N; }

template <class T>
void write_le(std::ostream& os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
    unsigned char b[sizeof(T)];
    is.read(reinterpret_cast<char*>(b), sizeof(T));
    if (!is) throw ConfigError("field container truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

constexpr char kMagic[8] = {'G', 'F', 'F', 'D', 'F', 'L', 'D', '1'};

} // namespace

double TorusGrid::nyquist() const { return kPi * N / L; }

void TorusGrid::validate(const BumpSpec& bump) const {
    if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("grid: side length must be positive");
    if (N < 16 || !is_power_of_two(N)) throw ConfigError("grid: points per side must be a power of two >= 16");
    if (!(nyquist() > bump.cutoff()))
        throw ConfigError("grid: Nyquist momentum pi*N/L = " + std::to_string(nyquist()) +
                          " does not exceed the kernel cutoff " + std::to_string(bump.cutoff()) + "; refine the grid");
}

void to_json(nlohmann::json& j, const TorusGrid& g) { j = nlohmann::json{{"L", g.L}, {"N", g.N}}; }

void from_json(const nlohmann::json& j, TorusGrid& g) {
    try {
        g.L = j.value("L", 128.0);
        g.N = j.value("N", 256);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
}

std::string to_string(Interpolation m) { return m == Interpolation::Fast ? "fast" : "reference"; }

Interpolation interpolation_from_string(const std::string& s) {
    if (s == "fast" || s == "bicubic") return Interpolation::Fast;
    if (s == "reference" || s == "spectral") return Interpolation::Reference;
    throw ConfigError("unknown interpolation mode '" + s + "' (expected fast|reference)");
}

// ---------------------------------------------------------------------------
// FieldRealization

FieldRealization FieldRealization::zero(const TorusGrid& grid, const BumpSpec& bump) {
    FieldRealization f;
    f.grid = grid;
    f.bump = bump;
    const std::size_t n2 = static_cast<std::size_t>(grid.N) * grid.N;
    f.xi_hat.assign(static_cast<std::size_t>(grid.N) * (grid.N / 2 + 1), {0.0, 0.0});
    f.xi.assign(n2, 0.0);
    f.omega1.assign(n2, 0.0);
    f.omega2.assign(n2, 0.0);
    f.rebuild_interpolation_table();
    return f;
}

Vec2 FieldRealization::momentum(int i, int j) const {
    const double dk = 2.0 * kPi / grid.L;
    return {dk * signed_index(i, grid.N), dk * j};
}

void FieldRealization::rebuild_interpolation_table() {
    const int N = grid.N, P = N + 3;
    padded_.resize(static_cast<std::size_t>(P) * P * 2);
    for (int ii = 0; ii < P; ++ii) {
        const int i = (ii - 1 + N) % N;
        for (int jj = 0; jj < P; ++jj) {
            const int j = (jj - 1 + N) % N;
            const std::size_t src = static_cast<std::size_t>(i) * N + j;
            const std::size_t dst = (static_cast<std::size_t>(ii) * P + jj) * 2;
            padded_[dst] = omega1[src];
            padded_[dst + 1] = omega2[src];
        }
    }
}

Vec2 FieldRealization::drift_at(const Vec2& x, Interpolation mode) const {
    return mode == Interpolation::Fast ? drift_fast(x) : drift_reference(x);
}

Vec2 FieldRealization::drift_fast(const Vec2& x) const {
    const int N = grid.N, P = N + 3;
    const double inv_h = N / grid.L;
    double u = x[0] * inv_h, v = x[1] * inv_h;
    u -= N * std::floor(u / N);
    v -= N * std::floor(v / N);
    int i0 = static_cast<int>(u), j0 = static_cast<int>(v);
    const double tu = u - i0, tv = v - j0;
    if (i0 >= N) i0 -= N;
    if (j0 >= N) j0 -= N;
    double wu[4], wv[4];
    keys_weights(tu, wu);
    keys_weights(tv, wv);
    double o1 = 0.0, o2 = 0.0;
    for (int a = 0; a < 4; ++a) {
        const double* row = padded_.data() + (static_cast<std::size_t>(i0 + a) * P + j0) * 2;
        const double r1 = wv[0] * row[0] + wv[1] * row[2] + wv[2] * row[4] + wv[3] * row[6];
        const double r2 = wv[0] * row[1] + wv[1] * row[3] + wv[2] * row[5] + wv[3] * row[7];
        o1 += wu[a] * r1;
        o2 += wu[a] * r2;
    }
    return {o1, o2};
}

Vec2 FieldRealization::drift_reference(const Vec2& x) const {
    const int N = grid.N, H = half();
    const double dk = 2.0 * kPi / grid.L;
    std::vector<std::complex<double>> e2(H);
    for (int j = 0; j < H; ++j) e2[j] = std::polar(1.0, dk * j * x[1]);
    std::complex<double> s1{0.0, 0.0}, s2{0.0, 0.0};
    for (int i = 0; i < N; ++i) {
        const int ki = signed_index(i, N);
        std::complex<double> a{0.0, 0.0}, b{0.0, 0.0};
        const std::complex<double>* row = xi_hat.data() + static_cast<std::size_t>(i) * H;
        for (int j = 0; j < H; ++j) {
            const double w = (j == 0) ? 1.0 : 2.0;
            const std::complex<double> t = w * row[j] * e2[j];
            a += dk * j * t;
            b += t;
        }
        const std::complex<double> e1 = std::polar(1.0, dk * ki * x[0]);
        s1 += e1 * a;
        s2 += e1 * (dk * ki) * b;
    }
    const std::complex<double> I{0.0, 1.0};
    return {std::real(I * s1), std::real(-I * s2)};
}

double FieldRealization::xi_at(const Vec2& x) const {
    const int N = grid.N, H = half();
    const double dk = 2.0 * kPi / grid.L;
    std::complex<double> s{0.0, 0.0};
    for (int i = 0; i < N; ++i) {
        const std::complex<double> e1 = std::polar(1.0, dk * signed_index(i, N) * x[0]);
        std::complex<double> a{0.0, 0.0};
        for (int j = 0; j < H; ++j) a += ((j == 0) ? 1.0 : 2.0) * xi_hat[static_cast<std::size_t>(i) * H + j] * std::polar(1.0, dk * j * x[1]);
        s += e1 * a;
    }
    return s.real();
}

double FieldRealization::omega_rms() const {
    double s = 0.0;
    for (std::size_t i = 0; i < omega1.size(); ++i) s += omega1[i] * omega1[i] + omega2[i] * omega2[i];
    return std::sqrt(s / static_cast<double>(omega1.size()));
}

double FieldRealization::spectral_divergence_exact() const {
    const int N = grid.N, H = half();
    double worst = 0.0, scale = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < H; ++j) {
            const auto p = momentum(i, j);
            const std::complex<double> a = xi_hat[static_cast<std::size_t>(i) * H + j];
            const std::complex<double> I{0.0, 1.0};
            const std::complex<double> w1 = I * p[1] * a, w2 = -I * p[0] * a;
            worst = std::max(worst, std::abs(p[0] * w1 + p[1] * w2));
            scale = std::max(scale, std::abs(w1) + std::abs(w2));
        }
    return scale > 0.0 ? worst / scale : 0.0;
}

double FieldRealization::spectral_divergence_roundtrip() const {
    const int N = grid.N, H = half();
    const std::size_t n2 = static_cast<std::size_t>(N) * N;
    double* in = fftw_alloc_real(n2);
    fftw_complex* o1 = fftw_alloc_complex(static_cast<std::size_t>(N) * H);
    fftw_complex* o2 = fftw_alloc_complex(static_cast<std::size_t>(N) * H);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lk(planner_mutex());
        plan = fftw_plan_dft_r2c_2d(N, N, in, o1, FFTW_ESTIMATE);
    }
    std::copy(omega1.begin(), omega1.end(), in);
    fftw_execute_dft_r2c(plan, in, o1);
    std::copy(omega2.begin(), omega2.end(), in);
    fftw_execute_dft_r2c(plan, in, o2);
    double worst = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < H; ++j) {
            const auto p = momentum(i, j);
            const std::size_t k = static_cast<std::size_t>(i) * H + j;
            const std::complex<double> w1(o1[k][0], o1[k][1]), w2(o2[k][0], o2[k][1]);
            worst = std::max(worst, std::abs(p[0] * w1 + p[1] * w2) / static_cast<double>(n2));
        }
    {
        std::lock_guard<std::mutex> lk(planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(o1);
    fftw_free(o2);
    const double rms = omega_rms();
    const double pmax = std::sqrt(2.0) * grid.nyquist();
    return rms > 0.0 ? worst / (pmax * rms) : worst;
}

void FieldRealization::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open field container for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    write_le<double>(os, grid.L);
    write_le<std::int64_t>(os, grid.N);
    write_le<std::uint64_t>(os, seed);
    write_le<double>(os, norm);
    nlohmann::json bj = bump;
    const std::string bs = bj.dump();
    write_le<std::uint64_t>(os, bs.size());
    os.write(bs.data(), static_cast<std::streamsize>(bs.size()));
    write_le<std::uint64_t>(os, xi_hat.size());
    for (const auto& c : xi_hat) {
        write_le<double>(os, c.real());
        write_le<double>(os, c.imag());
    }
    if (!os) throw NumericFault("failed writing field container: " + path);
}

FieldRealization FieldRealization::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open field container: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) throw ConfigError("not a field container: " + path);
    FieldRealization f;
    f.grid.L = read_le<double>(is);
    f.grid.N = static_cast<int>(read_le<std::int64_t>(is));
    f.seed = read_le<std::uint64_t>(is);
    f.norm = read_le<double>(is);
    const auto blen = read_le<std::uint64_t>(is);
    if (blen > (1u << 24)) throw ConfigError("field container: implausible header");
    std::string bs(blen, '\0');
    is.read(bs.data(), static_cast<std::streamsize>(blen));
    f.bump = nlohmann::json::parse(bs).get<BumpSpec>();
    f.grid.validate(f.bump);
    const auto n = read_le<std::uint64_t>(is);
    if (n != static_cast<std::uint64_t>(f.grid.N) * (f.grid.N / 2 + 1)) throw ConfigError("field container: coefficient count mismatch");
    f.xi_hat.resize(n);
    for (auto& c : f.xi_hat) {
        const double re = read_le<double>(is);
        const double im = read_le<double>(is);
        c = {re, im};
    }
    FieldSynthesizer syn(f.bump, f.grid, f.norm > 0.0 ? f.norm : 1.0);
    syn.samples_from_coefficients(f, true);
    return f;
}

// ---------------------------------------------------------------------------
// FieldSynthesizer

struct FieldSynthesizer::Plans {
    int N = 0;
    fftw_complex* spec = nullptr;
    double* real = nullptr;
    fftw_plan c2r = nullptr;

    explicit Plans(int n) : N(n) {
        const std::size_t H = static_cast<std::size_t>(n / 2 + 1);
        spec = fftw_alloc_complex(static_cast<std::size_t>(n) * H);
        real = fftw_alloc_real(static_cast<std::size_t>(n) * n);
        std::lock_guard<std::mutex> lk(planner_mutex());
        c2r = fftw_plan_dft_c2r_2d(n, n, spec, real, FFTW_ESTIMATE);
    }
    ~Plans() {
        {
            std::lock_guard<std::mutex> lk(planner_mutex());
            fftw_destroy_plan(c2r);
        }
        fftw_free(spec);
        fftw_free(real);
    }
};

FieldSynthesizer::FieldSynthesizer(const BumpSpec& bump, const TorusGrid& grid, double norm)
    : bump_(bump), grid_(grid), norm_(norm) {
    grid.validate(bump);
    if (!(norm >= 0.0) || !std::isfinite(norm)) throw ConfigError("synthesize: norm must be finite and >= 0");
    const int N = grid.N, H = N / 2 + 1;
    variance_.assign(static_cast<std::size_t>(N) * H, 0.0);
    amplitude_.assign(variance_.size(), 0.0);
    const double dk = 2.0 * kPi / grid.L;
    for (int i = 0; i < N; ++i) {
        const int ki = signed_index(i, N);
        if (ki == N / 2) continue;
        for (int j = 0; j < N / 2; ++j) {
            if (ki == 0 && j == 0) continue;
            const double p1 = dk * ki, p2 = dk * j;
            const double p2n = p1 * p1 + p2 * p2;
            const double v = norm * bump.v_hat_radial(std::sqrt(p2n)) / (p2n * grid.L * grid.L);
            variance_[static_cast<std::size_t>(i) * H + j] = v;
            amplitude_[static_cast<std::size_t>(i) * H + j] = std::sqrt(0.5 * v);
        }
    }
    plans_ = std::make_unique<Plans>(N);
}

FieldSynthesizer::~FieldSynthesizer() = default;

void FieldSynthesizer::synthesize(std::uint64_t seed, FieldRealization& out, bool with_xi) {
    const int N = grid_.N, H = N / 2 + 1;
    out.grid = grid_;
    out.bump = bump_;
    out.seed = seed;
    out.norm = norm_;
    out.xi_hat.assign(static_cast<std::size_t>(N) * H, {0.0, 0.0});

    Engine eng = make_engine(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < N; ++i) {
        const int ki = signed_index(i, N);
        for (int j = 0; j < H; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * H + j;
            const double amp = amplitude_[k];
            if (amp == 0.0) continue;
            // On the k2 = 0 line draw only k1 > 0; k1 < 0 is the conjugate.
            if (j == 0 && ki < 0) continue;
            const double g1 = gauss(eng), g2 = gauss(eng);
            out.xi_hat[k] = {amp * g1, amp * g2};
        }
    }
    for (int i = N / 2 + 1; i < N; ++i) {
        const std::size_t k = static_cast<std::size_t>(i) * H;
        out.xi_hat[k] = std::conj(out.xi_hat[static_cast<std::size_t>(N - i) * H]);
    }
    samples_from_coefficients(out, with_xi);
}

void FieldSynthesizer::samples_from_coefficients(FieldRealization& out, bool with_xi) {
    const int N = grid_.N, H = N / 2 + 1;
    const std::size_t n2 = static_cast<std::size_t>(N) * N;
    const double dk = 2.0 * kPi / grid_.L;
    auto run = [&](auto&& multiplier, std::vector<double>& dst) {
        for (int i = 0; i < N; ++i) {
            const double p1 = dk * signed_index(i, N);
            for (int j = 0; j < H; ++j) {
                const std::size_t k = static_cast<std::size_t>(i) * H + j;
                const std::complex<double> c = multiplier(p1, dk * j) * out.xi_hat[k];
                plans_->spec[k][0] = c.real();
                plans_->spec[k][1] = c.imag();
            }
        }
        fftw_execute_dft_c2r(plans_->c2r, plans_->spec, plans_->real);
        dst.assign(plans_->real, plans_->real + n2);
    };
    const std::complex<double> I{0.0, 1.0};
    if (with_xi)
        run([](double, double) { return std::complex<double>(1.0, 0.0); }, out.xi);
    else
        out.xi.clear();
    run([&](double, double p2) { return I * p2; }, out.omega1);
    run([&](double p1, double) { return -I * p1; }, out.omega2);
    out.rebuild_interpolation_table();
}

FieldRealization synthesize(const BumpSpec& bump, const TorusGrid& grid, std::uint64_t seed, double norm) {
    if (!(norm > 0.0)) throw ConfigError("synthesize: norm must be > 0 (use FieldRealization::zero for the zero field)");
    FieldSynthesizer syn(bump, grid, norm);
    FieldRealization f;
    syn.synthesize(seed, f, true);
    return f;
}

// ---------------------------------------------------------------------------
// Covariance diagnostics

double analytic_torus_covariance(const BumpSpec& bump, const TorusGrid& grid, double norm, const Vec2& x, int k, int l) {
    if (k < 1 || k > 2 || l < 1 || l > 2) throw ConfigError("covariance components must be 1 or 2");
    const int N = grid.N;
    const double dk = 2.0 * kPi / grid.L;
    double sum = 0.0;
    for (int a = -N / 2 + 1; a < N / 2; ++a)
        for (int b = 0; b < N / 2; ++b) {
            if (b == 0 && a <= 0) continue;  // half plane; the mirror mode doubles it
            const double p1 = dk * a, p2 = dk * b;
            const double p2n = p1 * p1 + p2 * p2;
            const double v = norm * bump.v_hat_radial(std::sqrt(p2n)) / (p2n * grid.L * grid.L);
            double m;
            if (k == 1 && l == 1) m = p2 * p2;
            else if (k == 2 && l == 2) m = p1 * p1;
            else m = -p1 * p2;
            sum += 2.0 * m * v * std::cos(p1 * x[0] + p2 * x[1]);
        }
    return sum;
}

std::vector<CovarianceRow> empirical_covariance(const BumpSpec& bump, const TorusGrid& grid, double norm,
                                                const std::vector<std::uint64_t>& seeds,
                                                const std::vector<Vec2>& separations) {
    if (seeds.size() < 30) throw StatisticsError("empirical_covariance needs at least 30 seeds");
    const int N = grid.N;
    const double h = grid.h();
    std::vector<std::array<int, 2>> offs;
    for (const auto& s : separations) {
        std::array<int, 2> o{};
        for (int c = 0; c < 2; ++c) {
            const double u = s[c] / h;
            const double r = std::round(u);
            if (std::abs(u - r) > 1e-9) throw ConfigError("covariance separations must be multiples of the grid spacing");
            o[c] = ((static_cast<int>(r) % N) + N) % N;
        }
        offs.push_back(o);
    }
    static constexpr int pairs[4][2] = {{1, 1}, {1, 2}, {2, 1}, {2, 2}};
    const std::size_t ns = separations.size();
    std::vector<double> sum(ns * 4, 0.0), sum2(ns * 4, 0.0);
    FieldSynthesizer syn(bump, grid, norm);
    FieldRealization f;
    for (auto seed : seeds) {
        syn.synthesize(seed, f, false);
        for (std::size_t s = 0; s < ns; ++s)
            for (int q = 0; q < 4; ++q) {
                const auto& A = pairs[q][0] == 1 ? f.omega1 : f.omega2;
                const auto& B = pairs[q][1] == 1 ? f.omega1 : f.omega2;
                double acc = 0.0;
                for (int i = 0; i < N; ++i) {
                    const int ii = (i + offs[s][0]) % N;
                    const double* ra = A.data() + static_cast<std::size_t>(i) * N;
                    const double* rb = B.data() + static_cast<std::size_t>(ii) * N;
                    for (int j = 0; j < N; ++j) acc += ra[j] * rb[(j + offs[s][1]) % N];
                }
                const double m = acc / (static_cast<double>(N) * N);
                sum[s * 4 + q] += m;
                sum2[s * 4 + q] += m * m;
            }
    }
    const double n = static_cast<double>(seeds.size());
    std::vector<CovarianceRow> rows;
    for (std::size_t s = 0; s < ns; ++s)
        for (int q = 0; q < 4; ++q) {
            const double mean = sum[s * 4 + q] / n;
            const double var = std::max(0.0, (sum2[s * 4 + q] - n * mean * mean) / (n - 1.0));
            rows.push_back({separations[s], pairs[q][0], pairs[q][1], mean, std::sqrt(var / n),
                            analytic_torus_covariance(bump, grid, norm, separations[s], pairs[q][0], pairs[q][1])});
        }
    return rows;
}

void write_covariance_csv(const std::string& path, const std::vector<CovarianceRow>& rows) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    os << "sep_x,sep_y,k,l,empirical,stderr,analytic\n" << std::setprecision(17);
    for (const auto& r : rows)
        os << r.separation[0] << ',' << r.separation[1] << ',' << r.k << ',' << r.l << ',' << r.empirical << ','
           << r.stderr_ << ',' << r.analytic << '\n';
}

double peclet_integral(const BumpSpec& bump, double kappa, double norm) {
    if (!(kappa > 0.0 && kappa < 1.0)) throw ConfigError("peclet_integral requires 0 < kappa < 1");
    if (norm == 0.0) return 0.0;
    const double rmax = 1.5 * bump.cutoff();
    if (kappa >= rmax) return 0.0;
    quad::Options opt;
    opt.rel_tol = 1e-12;
    auto f = [&](double u) { return bump.v_hat_radial(std::exp(u)); };
    const double lo = std::log(kappa), hi = std::log(rmax);
    std::vector<double> br;
    for (double r = 0.25; r < rmax; r *= 2.0)
        if (r > kappa) br.push_back(std::log(r));
    const auto res = quad::integrate_checked(f, lo, hi, opt, br, "peclet integral");
    return norm / (2.0 * kPi) * res.value;
}

} // namespace gffdrift
