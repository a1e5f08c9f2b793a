#include "quatfrac/runner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "quatfrac/frac1d.hpp"
#include "quatfrac/grid.hpp"
#include "quatfrac/parallel.hpp"
#include "quatfrac/psi_ops.hpp"

namespace quatfrac::runner {

namespace frac1d = quatfrac::frac1d;
namespace ops = quatfrac::psi_ops;
namespace idn = quatfrac::integral_id;
using grid::Box;
using grid::FieldFn;
using grid::Point3;

namespace {

// ---------------------------------------------------------------------------
// tokenizing and number parsing
// ---------------------------------------------------------------------------

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& tok, int line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) fail(line, "trailing characters in number '" + tok + "'");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        fail(line, "not a number: '" + tok + "'");
    }
}

long parse_long(const std::string& tok, int line) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(tok, &pos);
        if (pos != tok.size()) fail(line, "trailing characters in integer '" + tok + "'");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        fail(line, "not an integer: '" + tok + "'");
    }
}

// Accepts "0.5", "1e-3", "0.5+0.2i", "0.5-0.2i", "0.7i", "-0.3i".
std::complex<double> parse_complex(const std::string& tok, int line) {
    if (tok.empty()) fail(line, "empty number token");
    if (tok.back() != 'i') return {parse_double(tok, line), 0.0};
    const std::string body = tok.substr(0, tok.size() - 1);
    if (body.empty()) fail(line, "malformed complex number '" + tok + "'");
    // Split at the last sign that does not follow an exponent marker.
    std::size_t split = std::string::npos;
    for (std::size_t i = 1; i < body.size(); ++i) {
        if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E')
            split = i;
    }
    if (split == std::string::npos) return {0.0, parse_double(body, line)};
    return {parse_double(body.substr(0, split), line), parse_double(body.substr(split), line)};
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string sanitize(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return out;
}

// ---------------------------------------------------------------------------
// catalogue
// ---------------------------------------------------------------------------

struct CatalogueEntry {
    const char* name;
    const char* what;
};

constexpr CatalogueEntry kCatalogue[] = {
    {"fund-theorem",
     "proportional fractional derivative inverts the matching integral on an interval"},
    {"stokes",
     "boundary form of a field pair equals the volume integral of the first-order "
     "operator combination"},
    {"borel-pompeiu",
     "interior values are reproduced by the boundary kernel integral minus the volume "
     "correction; exterior points give zero"},
    {"prop32",
     "product rule of the weighted first-order operator on the exponential-weighted "
     "inner integral"},
    {"frac-stokes",
     "fractional proportional boundary/volume identity under the exponential weight "
     "family"},
    {"frac-bp",
     "fractional proportional reproduction: boundary minus volume equals the slice sum "
     "plus remainder terms"},
    {"cauchy-corollary",
     "boundary-only reproduction for certified null solutions of the first-order "
     "operators"},
    {"kernel-hyperholo",
     "the reproduction kernel is annihilated by the right first-order operator away "
     "from its pole"},
    {"sphere-moment",
     "kernel-numerator moment over a sphere equals the full solid angle times the "
     "radius cubed"},
    {"laplacian-factor",
     "the four compositions of the first-order operator and its conjugate reproduce "
     "the Laplacian"},
};

int catalogue_index(const std::string& id) {
    for (int i = 0; i < 10; ++i)
        if (id == kCatalogue[i].name) return i;
    return -1;
}

// Which resolution knobs an identity consumes; refinement monotonicity is
// enforced on exactly these.
struct Uses {
    bool nv, ms, nq, hf;
};

Uses uses_of(const std::string& id) {
    if (id == "fund-theorem") return {false, false, true, true};
    if (id == "stokes") return {true, true, false, false};
    if (id == "borel-pompeiu") return {true, true, false, false};
    if (id == "prop32") return {false, false, true, true};
    if (id == "frac-stokes") return {true, true, true, true};
    if (id == "frac-bp") return {true, true, true, true};
    if (id == "cauchy-corollary") return {false, true, true, true};
    if (id == "kernel-hyperholo") return {false, true, false, true};
    if (id == "sphere-moment") return {false, true, false, false};
    return {true, false, false, false};  // laplacian-factor
}

// ---------------------------------------------------------------------------
// test-function and weight families
// ---------------------------------------------------------------------------

Quaternion random_quat(std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double w = uni(rng), x = uni(rng), y = uni(rng), z = uni(rng);
    return Quaternion{w * scale, x * scale, y * scale, z * scale};
}

// total=true: total degree <= deg; total=false: degree <= deg in each
// variable separately (non-constant high-order partials).
FieldFn make_poly(std::uint64_t seed, double scale, int deg, bool total) {
    std::mt19937_64 rng(seed);
    std::vector<std::array<int, 3>> expo;
    for (int a = 0; a <= deg; ++a)
        for (int b = 0; (total ? a + b : b) <= deg; ++b)
            for (int c = 0; (total ? a + b + c : c) <= deg; ++c) expo.push_back({a, b, c});
    std::vector<Quaternion> coef;
    coef.reserve(expo.size());
    for (std::size_t i = 0; i < expo.size(); ++i) coef.push_back(random_quat(rng, scale));
    return [expo, coef](const Point3& q) {
        Quaternion acc{};
        for (std::size_t i = 0; i < expo.size(); ++i) {
            double m = 1.0;
            for (int k = 0; k < 3; ++k)
                for (int p = 0; p < expo[i][k]; ++p) m *= q[k];
            acc += coef[i] * m;
        }
        return acc;
    };
}

FieldFn make_trig3(std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> wave(1, 2);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    struct Term {
        Quaternion amp;
        std::array<double, 3> k;
        double phase;
    };
    std::vector<Term> terms;
    for (int m = 0; m < 4; ++m) {
        Term t;
        t.amp = random_quat(rng, scale);
        t.k = {double(wave(rng)), double(wave(rng)), double(wave(rng))};
        t.phase = std::numbers::pi * uni(rng);
        terms.push_back(t);
    }
    return [terms](const Point3& q) {
        Quaternion acc{};
        for (const auto& t : terms)
            acc += t.amp * std::sin(t.k[0] * q[0] + t.k[1] * q[1] + t.k[2] * q[2] + t.phase);
        return acc;
    };
}

FieldFn make_field3(const FamilySpec& fs, std::uint64_t fallback_seed) {
    const auto& c = fs.coeffs;
    if (fs.family == "zero") return [](const Point3&) { return Quaternion{}; };
    if (fs.family == "const")
        return [q = Quaternion{c[0], c[1], c[2], c[3]}](const Point3&) { return q; };
    if (fs.family == "cr-null")
        return [](const Point3& p) { return Quaternion{-p[1], p[0], 0.0, 0.0}; };
    const std::uint64_t seed = c.empty() ? fallback_seed : static_cast<std::uint64_t>(c[0]);
    const double scale = c.size() > 1 ? c[1] : 1.0;
    if (fs.family == "poly3") return make_poly(seed, scale, 3, true);
    if (fs.family == "poly4") return make_poly(seed, scale, 4, true);
    if (fs.family == "tensor3") return make_poly(seed, scale, 3, false);
    return make_trig3(seed, scale);  // "trig" (validated at parse)
}

frac1d::QuatFn make_field1(const FamilySpec& fs) {
    const auto& c = fs.coeffs;
    if (fs.family == "zero") return [](double) { return Quaternion{}; };
    if (fs.family == "sin") {
        const double w = c.empty() ? 1.0 : c[0];
        return [w](double t) { return Quaternion{std::sin(w * t), 0.0, 0.0, 0.0}; };
    }
    if (fs.family == "cos") {
        const double w = c.empty() ? 1.0 : c[0];
        return [w](double t) { return Quaternion{std::cos(w * t), 0.0, 0.0, 0.0}; };
    }
    // "poly": real coefficients c0 + c1 t + ...
    return [c](double t) {
        double acc = 0.0;
        for (std::size_t j = c.size(); j-- > 0;) acc = acc * t + c[j];
        return Quaternion{acc, 0.0, 0.0, 0.0};
    };
}

ops::Weight3 make_weight3(const FamilySpec& ws) {
    ops::Weight3 w;
    const auto& c = ws.coeffs;
    if (ws.family == "linear") {
        const double s = c[0];
        w.phi = [s](const Point3& q) { return s * (q[0] + q[1] + q[2]); };
        w.dphi = [s](const Point3&, int) { return s; };
        w.inv_slice = [s](double u, const Point3& y, int axis) {
            return y[axis] + (u - s * (y[0] + y[1] + y[2])) / s;
        };
        return w;
    }
    if (ws.family == "quadratic") {
        const double s = c[0];
        const std::array<double, 3> a{c[1], c[2], c[3]};
        w.phi = [s, a](const Point3& q) {
            return s * (q[0] + q[1] + q[2]) + a[0] * q[0] * q[0] + a[1] * q[1] * q[1] +
                   a[2] * q[2] * q[2];
        };
        w.dphi = [s, a](const Point3& q, int axis) { return s + 2.0 * a[axis] * q[axis]; };
        if (a[0] >= 0.0 && a[1] >= 0.0 && a[2] >= 0.0) {
            w.inv_slice = [s, a, phi = w.phi](double u, const Point3& y, int axis) {
                const double rest = phi(y) - (s * y[axis] + a[axis] * y[axis] * y[axis]);
                const double rhs = u - rest;
                if (a[axis] == 0.0) return rhs / s;
                return (-s + std::sqrt(s * s + 4.0 * a[axis] * rhs)) / (2.0 * a[axis]);
            };
        }
        return w;
    }
    // "exp-shift": per-axis s*(e^{k t} - 1)/k.
    const double s = c[0], k = c[1];
    w.phi = [s, k](const Point3& q) {
        return s * ((std::exp(k * q[0]) - 1.0) + (std::exp(k * q[1]) - 1.0) +
                    (std::exp(k * q[2]) - 1.0)) /
               k;
    };
    w.dphi = [s, k](const Point3& q, int axis) { return s * std::exp(k * q[axis]); };
    w.inv_slice = [s, k, phi = w.phi](double u, const Point3& y, int axis) {
        const double rest = phi(y) - s * (std::exp(k * y[axis]) - 1.0) / k;
        return std::log(1.0 + k * (u - rest) / s) / k;
    };
    return w;
}

frac1d::Weight make_weight1(const FamilySpec& ws) {
    frac1d::Weight w;
    const auto& c = ws.coeffs;
    if (ws.family == "linear") {
        const double s = c[0];
        w.phi = [s](double t) { return s * t; };
        w.dphi = [s](double) { return s; };
        w.inv_phi = [s](double u) { return u / s; };
        return w;
    }
    if (ws.family == "quadratic") {
        const double s = c[0], a = c[1];
        w.phi = [s, a](double t) { return s * t + a * t * t; };
        w.dphi = [s, a](double t) { return s + 2.0 * a * t; };
        if (a > 0.0)
            w.inv_phi = [s, a](double u) {
                return (-s + std::sqrt(s * s + 4.0 * a * u)) / (2.0 * a);
            };
        else if (a == 0.0)
            w.inv_phi = [s](double u) { return u / s; };
        return w;
    }
    const double s = c[0], k = c[1];  // "exp-shift"
    w.phi = [s, k](double t) { return s * (std::exp(k * t) - 1.0) / k; };
    w.dphi = [s, k](double t) { return s * std::exp(k * t); };
    w.inv_phi = [s, k](double u) { return std::log(1.0 + k * u / s) / k; };
    return w;
}

// ---------------------------------------------------------------------------
// config parsing
// ---------------------------------------------------------------------------

struct Field {
    std::vector<std::string> tokens;
    int line = 0;
};

struct RawSection {
    std::string name;
    int line = 0;
    std::map<std::string, Field> fields;
};

const std::vector<std::string>& allowed_fields(const std::string& id) {
    static const std::map<std::string, std::vector<std::string>> table = {
        {"fund-theorem", {"interval", "alpha", "rho", "phi", "f", "points"}},
        {"stokes", {"box", "f", "g"}},
        {"borel-pompeiu", {"box", "f", "g", "x"}},
        {"prop32", {"box", "alpha", "sigma", "phi", "f", "x", "y"}},
        {"frac-stokes", {"box", "alpha", "beta", "sigma", "sigma_g", "phi", "f", "g", "y"}},
        {"frac-bp", {"box", "alpha", "beta", "sigma", "sigma_g", "phi", "f", "g", "x", "y"}},
        {"cauchy-corollary",
         {"box", "alpha", "beta", "sigma", "sigma_g", "phi", "f", "g", "x", "y"}},
        {"kernel-hyperholo", {}},
        {"sphere-moment", {"r", "center"}},
        {"laplacian-factor", {"box", "f"}},
    };
    return table.at(id);
}

void need_tokens(const Field& fd, const std::string& key, std::size_t n) {
    if (fd.tokens.size() != n)
        fail(fd.line, "field '" + key + "' expects " + std::to_string(n) + " value(s), got " +
                          std::to_string(fd.tokens.size()));
}

Point3 parse_point(const Field& fd, const std::string& key) {
    need_tokens(fd, key, 3);
    return {parse_double(fd.tokens[0], fd.line), parse_double(fd.tokens[1], fd.line),
            parse_double(fd.tokens[2], fd.line)};
}

FamilySpec parse_family(const Field& fd, const std::string& key) {
    if (fd.tokens.empty()) fail(fd.line, "field '" + key + "' needs a family name");
    FamilySpec fs;
    fs.family = fd.tokens[0];
    for (std::size_t i = 1; i < fd.tokens.size(); ++i)
        fs.coeffs.push_back(parse_double(fd.tokens[i], fd.line));
    return fs;
}

void check_field_family(const FamilySpec& fs, int line, bool one_dim, const std::string& key) {
    const auto& c = fs.coeffs;
    if (one_dim) {
        if (fs.family == "zero" && c.empty()) return;
        if ((fs.family == "sin" || fs.family == "cos") && c.size() <= 1) return;
        if (fs.family == "poly" && !c.empty()) return;
        fail(line, "field '" + key + "': unknown one-variable family '" + fs.family +
                       "' (or wrong coefficient count); valid: sin [w] | cos [w] | poly c0 "
                       "c1 ... | zero");
    }
    if (fs.family == "zero" && c.empty()) return;
    if (fs.family == "cr-null" && c.empty()) return;
    if (fs.family == "const" && c.size() == 4) return;
    if ((fs.family == "poly3" || fs.family == "poly4" || fs.family == "tensor3" ||
         fs.family == "trig") &&
        c.size() <= 2)
        return;
    fail(line, "field '" + key + "': unknown field family '" + fs.family +
                   "' (or wrong coefficient count); valid: const w x y z | poly3 [seed "
                   "[scale]] | poly4 [seed [scale]] | tensor3 [seed [scale]] | trig [seed "
                   "[scale]] | cr-null | zero");
}

void check_weight_family(const FamilySpec& ws, int line, bool one_dim, double lo0, double hi0,
                         const Box& box) {
    const auto& c = ws.coeffs;
    const auto positive = [&](double v, const char* what) {
        if (!(v > 0.0)) fail(line, std::string("phi: ") + what + " must be positive");
    };
    if (ws.family == "linear") {
        if (c.size() != 1) fail(line, "phi: linear takes one coefficient");
        positive(c[0], "the slope");
        return;
    }
    if (ws.family == "quadratic") {
        if (one_dim) {
            if (c.size() != 2) fail(line, "phi: quadratic takes two coefficients (c a)");
            positive(c[0], "the slope");
            if (!(c[0] + 2.0 * c[1] * lo0 > 0.0 && c[0] + 2.0 * c[1] * hi0 > 0.0))
                fail(line, "phi: quadratic derivative must stay positive on the interval");
            return;
        }
        if (c.size() != 4) fail(line, "phi: quadratic takes four coefficients (c a0 a1 a2)");
        positive(c[0], "the slope");
        for (int k = 0; k < 3; ++k)
            if (!(c[0] + 2.0 * c[1 + k] * box.a[k] > 0.0 &&
                  c[0] + 2.0 * c[1 + k] * box.b[k] > 0.0))
                fail(line, "phi: quadratic derivative must stay positive on the box (axis " +
                               std::to_string(k) + ")");
        return;
    }
    if (ws.family == "exp-shift") {
        if (c.size() != 2) fail(line, "phi: exp-shift takes two coefficients (c s)");
        positive(c[0], "the scale");
        if (c[1] == 0.0) fail(line, "phi: exp-shift rate must be nonzero");
        return;
    }
    fail(line, "phi: unknown weight family '" + ws.family +
                   "'; valid: linear c | quadratic ... | exp-shift c s");
}

void check_order_token(const std::complex<double>& a, int line, const std::string& key) {
    if (!(a.real() > 0.0 && a.real() <= 1.0))
        fail(line, "field '" + key + "': order real part must lie in (0, 1]");
    if (a.real() == 1.0 && a.imag() != 0.0)
        fail(line, "field '" + key + "': order 1 admits no imaginary part");
}

Experiment build_experiment(const RawSection& raw) {
    Experiment e;
    e.name = raw.name;
    e.line = raw.line;

    const auto it_id = raw.fields.find("identity");
    if (it_id == raw.fields.end())
        fail(raw.line, "experiment '" + raw.name + "' has no identity field");
    need_tokens(it_id->second, "identity", 1);
    e.identity = it_id->second.tokens[0];
    if (catalogue_index(e.identity) < 0) {
        std::string valid;
        for (const auto& ent : kCatalogue) valid += std::string(" ") + ent.name;
        fail(it_id->second.line, "unknown identity '" + e.identity + "'; valid:" + valid);
    }
    const bool one_dim = e.identity == "fund-theorem";
    const auto& allowed = allowed_fields(e.identity);
    const auto is_allowed = [&](const std::string& key) {
        return std::find(allowed.begin(), allowed.end(), key) != allowed.end();
    };

    bool have_alpha = false, have_beta = false, have_sigma = false, have_sigma_g = false;
    bool have_f = false, have_g = false, have_phi = false;
    std::map<long, Field> res;

    for (const auto& [key, fd] : raw.fields) {
        if (key == "identity") continue;
        if (key.rfind("res.", 0) == 0) {
            const long idx = parse_long(key.substr(4), fd.line);
            if (idx < 1) fail(fd.line, "resolution index must be >= 1");
            if (!res.emplace(idx, fd).second) fail(fd.line, "duplicate resolution index");
            continue;
        }
        if (key == "res") fail(fd.line, "resolutions need an index: res.1, res.2, ...");
        if (key.rfind("require.", 0) == 0) {
            const std::string sub = key.substr(8);
            if (sub == "residual_max") {
                need_tokens(fd, key, 1);
                e.contract.residual_max = parse_double(fd.tokens[0], fd.line);
            } else if (sub == "residual_rel") {
                need_tokens(fd, key, 1);
                e.contract.residual_rel = parse_double(fd.tokens[0], fd.line);
            } else if (sub == "monotone") {
                need_tokens(fd, key, 1);
                if (fd.tokens[0] == "true")
                    e.contract.monotone = true;
                else if (fd.tokens[0] == "false")
                    e.contract.monotone = false;
                else
                    fail(fd.line, "require.monotone takes true or false");
            } else if (sub == "order_min") {
                need_tokens(fd, key, 1);
                e.contract.order_min = parse_double(fd.tokens[0], fd.line);
            } else if (sub == "order_max") {
                need_tokens(fd, key, 1);
                e.contract.order_max = parse_double(fd.tokens[0], fd.line);
            } else {
                fail(fd.line, "unknown contract field '" + key +
                                  "'; valid: residual_max residual_rel monotone order_min "
                                  "order_max");
            }
            continue;
        }
        if (key == "seed") {
            need_tokens(fd, key, 1);
            e.seed = static_cast<std::uint64_t>(parse_long(fd.tokens[0], fd.line));
            continue;
        }
        if (!is_allowed(key))
            fail(fd.line, "field '" + key + "' is not used by identity '" + e.identity + "'");

        if (key == "box") {
            need_tokens(fd, key, 6);
            double v[6];
            for (int i = 0; i < 6; ++i) v[i] = parse_double(fd.tokens[i], fd.line);
            for (int k = 0; k < 3; ++k)
                if (!(v[k] < v[3 + k])) fail(fd.line, "box: requires a_k < b_k");
            e.box = Box({v[0], v[1], v[2]}, {v[3], v[4], v[5]});
        } else if (key == "alpha") {
            if (one_dim) {
                need_tokens(fd, key, 1);
                e.alpha1 = parse_complex(fd.tokens[0], fd.line);
                check_order_token(e.alpha1, fd.line, key);
            } else {
                need_tokens(fd, key, 3);
                for (int k = 0; k < 3; ++k) {
                    e.alpha[k] = parse_complex(fd.tokens[k], fd.line);
                    check_order_token(e.alpha[k], fd.line, key);
                    if (e.alpha[k].imag() != 0.0)
                        fail(fd.line, "three-dimensional identities take real orders");
                }
            }
            have_alpha = true;
        } else if (key == "beta") {
            need_tokens(fd, key, 3);
            for (int k = 0; k < 3; ++k) {
                e.beta[k] = parse_complex(fd.tokens[k], fd.line);
                check_order_token(e.beta[k], fd.line, key);
                if (e.beta[k].imag() != 0.0)
                    fail(fd.line, "three-dimensional identities take real orders");
            }
            have_beta = true;
        } else if (key == "sigma" || key == "sigma_g") {
            need_tokens(fd, key, 3);
            double v[3];
            for (int k = 0; k < 3; ++k) {
                v[k] = parse_double(fd.tokens[k], fd.line);
                if (!(v[k] >= 0.0 && v[k] <= 1.0))
                    fail(fd.line, "field '" + key + "': components must lie in [0, 1]");
            }
            (key == "sigma" ? e.sigma : e.sigma_g) = AValue(v[0], v[1], v[2]);
            (key == "sigma" ? have_sigma : have_sigma_g) = true;
        } else if (key == "phi") {
            e.phi = parse_family(fd, key);
            have_phi = true;
        } else if (key == "f") {
            e.f = parse_family(fd, key);
            check_field_family(e.f, fd.line, one_dim, key);
            have_f = true;
        } else if (key == "g") {
            e.g = parse_family(fd, key);
            check_field_family(e.g, fd.line, one_dim, key);
            have_g = true;
        } else if (key == "x") {
            e.x = parse_point(fd, key);
        } else if (key == "y") {
            e.y = parse_point(fd, key);
        } else if (key == "interval") {
            need_tokens(fd, key, 2);
            e.interval_a = parse_double(fd.tokens[0], fd.line);
            e.interval_b = parse_double(fd.tokens[1], fd.line);
            if (!(e.interval_a < e.interval_b)) fail(fd.line, "interval: requires a < b");
        } else if (key == "rho") {
            need_tokens(fd, key, 1);
            e.rho = parse_double(fd.tokens[0], fd.line);
            if (!(e.rho > 0.0 && e.rho <= 1.0)) fail(fd.line, "rho must lie in (0, 1]");
        } else if (key == "points") {
            need_tokens(fd, key, 1);
            e.points = static_cast<int>(parse_long(fd.tokens[0], fd.line));
            if (e.points < 1) fail(fd.line, "points must be >= 1");
        } else if (key == "r") {
            need_tokens(fd, key, 1);
            e.radius = parse_double(fd.tokens[0], fd.line);
            if (!(e.radius > 0.0)) fail(fd.line, "r must be positive");
        } else if (key == "center") {
            e.center = parse_point(fd, key);
        } else {
            fail(fd.line, "unknown field '" + key + "'");
        }
    }

    if (!have_beta) e.beta = e.alpha;
    if (!have_sigma_g) e.sigma_g = e.sigma;
    (void)have_alpha;
    (void)have_sigma;
    if (!have_f) {
        if (one_dim)
            e.f = FamilySpec{"sin", {}};
        else if (e.identity == "laplacian-factor")
            // Degree 4 keeps the fourth partials nonzero; on cubics the
            // stencil compositions are exact and leave nothing to measure.
            e.f = FamilySpec{"poly4", {}};
        else
            e.f = FamilySpec{"poly3", {}};
    }
    if (!have_g) {
        const bool pair_identity = e.identity == "stokes" || e.identity == "frac-stokes";
        e.g = pair_identity ? FamilySpec{"poly3", {double(e.seed + 1)}} : FamilySpec{"zero", {}};
    }
    if (have_phi || one_dim || is_allowed("phi"))
        check_weight_family(e.phi, e.line, one_dim, e.interval_a, e.interval_b, e.box);

    // Resolutions: collect in index order, then enforce refinement on the
    // knobs this identity uses.
    if (res.empty()) fail(raw.line, "experiment '" + raw.name + "': resolutions list is empty");
    for (const auto& [idx, fd] : res) {
        need_tokens(fd, "res." + std::to_string(idx), 4);
        const long n = parse_long(fd.tokens[0], fd.line);
        const long m = parse_long(fd.tokens[1], fd.line);
        const long nq = parse_long(fd.tokens[2], fd.line);
        const double hf = parse_double(fd.tokens[3], fd.line);
        const Uses u = uses_of(e.identity);
        if (u.nv && n < 1) fail(fd.line, "n_vol must be >= 1 for this identity");
        if (u.ms && m < 1) fail(fd.line, "m_surf must be >= 1 for this identity");
        if (u.nq && nq < 2) fail(fd.line, "n_quad must be >= 2 for this identity");
        if (u.hf && !(hf > 0.0)) fail(fd.line, "h_fd must be positive for this identity");
        if (n < 0 || m < 0 || nq < 0 || hf < 0.0) fail(fd.line, "negative resolution entry");
        e.levels.push_back(idn::Resolution{{int(n), int(n), int(n)}, int(m), int(nq), hf});
    }
    const Uses u = uses_of(e.identity);
    for (std::size_t k = 1; k < e.levels.size(); ++k) {
        const auto& p = e.levels[k - 1];
        const auto& c = e.levels[k];
        bool finer = false, coarser = false;
        if (u.nv) (c.n_vol[0] > p.n_vol[0] ? finer : coarser) |= c.n_vol[0] != p.n_vol[0];
        if (u.ms) (c.m_surf > p.m_surf ? finer : coarser) |= c.m_surf != p.m_surf;
        if (u.nq) (c.n_quad > p.n_quad ? finer : coarser) |= c.n_quad != p.n_quad;
        if (u.hf) (c.h_fd < p.h_fd ? finer : coarser) |= c.h_fd != p.h_fd;
        if (coarser || !finer)
            fail(raw.line, "experiment '" + raw.name + "': resolutions must be strictly " +
                               "increasing (level " + std::to_string(k + 1) +
                               " does not refine level " + std::to_string(k) + ")");
    }
    return e;
}

// ---------------------------------------------------------------------------
// level drivers
// ---------------------------------------------------------------------------

struct RowVal {
    Quaternion lhs{};
    Quaternion rhs{};
    double residual = 0.0;
};

std::array<frac1d::Order, 3> real_orders(const std::array<std::complex<double>, 3>& a) {
    return {frac1d::Order(a[0].real()), frac1d::Order(a[1].real()), frac1d::Order(a[2].real())};
}

RowVal run_fund_theorem(const Experiment& e, const idn::Resolution& L) {
    const auto f = make_field1(e.f);
    const auto w = make_weight1(e.phi);
    const double a = e.interval_a, b = e.interval_b;
    const int nq = L.n_quad;
    const double h = L.h_fd;
    const frac1d::Proportion pr(e.rho);

    struct PointOut {
        Quaternion lhs, rhs;
        double err;
    };
    const auto eval = [&](std::size_t j) -> PointOut {
        const double t = a + (b - a) * double(j + 1) / double(e.points + 1);
        if (e.alpha1.imag() == 0.0) {
            const frac1d::Order al(e.alpha1.real());
            const frac1d::QuatFn integ = [&](double s) {
                return frac1d::prop_frac_integral(f, al, pr, w, a, b, s, frac1d::Side::left, nq);
            };
            const Quaternion d = frac1d::prop_frac_derivative(integ, al, pr, w, a, b, t,
                                                              frac1d::Side::left, nq, h);
            return {d, f(t), norm(d - f(t))};
        }
        const frac1d::Order al(e.alpha1);
        const auto integ_c = [&](double s) {
            return frac1d::prop_frac_integral_cx(f, al, pr, w, a, b, s, frac1d::Side::left, nq);
        };
        const frac1d::QuatFn ure = [&](double s) { return integ_c(s).re; };
        const frac1d::QuatFn uim = [&](double s) { return integ_c(s).im; };
        const CQuaternion d =
            frac1d::prop_frac_derivative_cx(ure, al, pr, w, a, b, t, frac1d::Side::left, nq, h) +
            std::complex<double>(0.0, 1.0) *
                frac1d::prop_frac_derivative_cx(uim, al, pr, w, a, b, t, frac1d::Side::left, nq,
                                                h);
        return {d.re, f(t), norm(d - CQuaternion(f(t)))};
    };
    const auto outs = par::parallel_map<PointOut>(static_cast<std::size_t>(e.points), eval);
    RowVal rv;
    rv.residual = -1.0;
    for (const auto& o : outs)
        if (o.err > rv.residual) rv = {o.lhs, o.rhs, o.err};
    return rv;
}

RowVal from_report(const idn::IdentityReport& rep) { return {rep.lhs, rep.rhs, rep.residual}; }

RowVal run_level(const Experiment& e, const idn::Resolution& L) {
    const auto psi = StructuralSet::standard();
    const std::string& id = e.identity;
    if (id == "fund-theorem") return run_fund_theorem(e, L);
    if (id == "stokes") {
        const auto f = make_field3(e.f, e.seed);
        const auto g = make_field3(e.g, e.seed + 1);
        return from_report(idn::stokes_residual(g, f, e.box, L.n_vol, L.m_surf, psi));
    }
    if (id == "borel-pompeiu") {
        const auto f = make_field3(e.f, e.seed);
        const auto g = make_field3(e.g, e.seed + 1);
        return from_report(
            idn::borel_pompeiu_classical(f, g, e.x, e.box, L.n_vol, L.m_surf, psi));
    }
    if (id == "prop32") {
        const auto f = make_field3(e.f, e.seed);
        const ops::FracParams p(e.box, real_orders(e.alpha), e.sigma, make_weight3(e.phi));
        const auto ls = idn::build_lambda(p.w, e.sigma, e.y, psi, e.box);
        RowVal rv;
        rv.residual =
            idn::weighted_product_rule_residual(f, p, ls, psi, e.y, e.x, L.n_quad, L.h_fd);
        return rv;
    }
    if (id == "frac-stokes" || id == "frac-bp" || id == "cauchy-corollary") {
        const auto f = make_field3(e.f, e.seed);
        const auto g = make_field3(e.g, e.seed + 1);
        const ops::FracParams pf(e.box, real_orders(e.alpha), e.sigma, make_weight3(e.phi));
        const ops::FracParams pg(e.box, real_orders(e.beta), e.sigma_g, make_weight3(e.phi));
        if (id == "frac-stokes")
            return from_report(idn::frac_stokes_residual(f, g, pf, pg, e.y, e.box, L.n_vol,
                                                         L.m_surf, psi, L.n_quad, L.h_fd));
        if (id == "frac-bp")
            return from_report(idn::frac_borel_pompeiu(f, g, pf, pg, e.x, e.y, e.box, L.n_vol,
                                                       L.m_surf, psi, L.n_quad, L.h_fd));
        return from_report(idn::cauchy_corollary_check(f, g, pf, pg, e.x, e.y, e.box, L.n_vol,
                                                       L.m_surf, psi, L.n_quad, L.h_fd));
    }
    if (id == "kernel-hyperholo") {
        RowVal rv;
        rv.residual = idn::kernel_hyperholomorphy_residual(psi, L.h_fd, L.m_surf);
        return rv;
    }
    if (id == "sphere-moment") {
        RowVal rv;
        rv.lhs = idn::sphere_moment(e.center, e.radius, L.m_surf, psi);
        rv.rhs = Quaternion{4.0 * std::numbers::pi * e.radius * e.radius * e.radius, 0.0, 0.0,
                            0.0};
        rv.residual = norm(rv.lhs - rv.rhs);
        return rv;
    }
    // laplacian-factor: compare the four first-order compositions against the
    // direct second-difference Laplacian on interior nodes (margin 2, where
    // every stencil is central).
    const int n = L.n_vol[0];
    if (n < 5) throw std::domain_error("laplacian-factor: n_vol must be >= 5");
    const auto f = make_field3(e.f, e.seed);
    const auto gf = grid::sample_field(f, e.box, {n, n, n});
    const auto lap = ops::laplacian(gf);
    const auto psiC = psi.conjugated();
    RowVal rv;
    for (const auto hand : {ops::Hand::left, ops::Hand::right}) {
        const auto inner_d = ops::psi_dbar(gf, psi, hand);
        const auto inner_c = ops::psi_dbar(gf, psiC, hand);
        const auto comp_a = ops::psi_dbar(inner_d, psiC, hand);
        const auto comp_b = ops::psi_dbar(inner_c, psi, hand);
        for (int i = 2; i <= n - 2; ++i)
            for (int j = 2; j <= n - 2; ++j)
                for (int k = 2; k <= n - 2; ++k) {
                    const auto& l = lap.at(i, j, k);
                    rv.residual = std::max(rv.residual, norm(comp_a.at(i, j, k) - l));
                    rv.residual = std::max(rv.residual, norm(comp_b.at(i, j, k) - l));
                }
    }
    return rv;
}

// ---------------------------------------------------------------------------
// contracts and CSV
// ---------------------------------------------------------------------------

struct LevelOut {
    bool ok = false;
    RowVal val;
    std::optional<double> order;
    std::string error;
};

std::string csv_row(const std::string& identity, const idn::Resolution& L, const LevelOut& out) {
    std::string row = identity;
    row += ',' + std::to_string(L.n_vol[0]);
    row += ',' + std::to_string(L.m_surf);
    row += ',' + std::to_string(L.n_quad);
    row += ',' + fmt_g(L.h_fd);
    const auto quat_cols = [&row](const Quaternion& q) {
        row += ',' + fmt_g(q.w);
        row += ',' + fmt_g(q.x);
        row += ',' + fmt_g(q.y);
        row += ',' + fmt_g(q.z);
    };
    if (out.ok) {
        quat_cols(out.val.lhs);
        quat_cols(out.val.rhs);
        row += ',' + fmt_g(out.val.residual);
    } else {
        for (int i = 0; i < 9; ++i) row += ",nan";
    }
    row += ',';
    if (out.order) row += fmt_g(*out.order);
    row += ',';
    row += out.ok ? "ok" : "error: " + sanitize(out.error);
    row += '\n';
    return row;
}

std::string evaluate_contract(const Experiment& e, const std::vector<LevelOut>& outs,
                              double tol_scale) {
    std::vector<std::string> why;
    for (std::size_t k = 0; k < outs.size(); ++k)
        if (!outs[k].ok) why.push_back("level " + std::to_string(k + 1) + " failed to run");
    if (why.empty()) {
        const Contract& c = e.contract;
        if (c.monotone) {
            for (std::size_t k = 1; k < outs.size(); ++k)
                if (!(outs[k].val.residual < outs[k - 1].val.residual)) {
                    why.push_back("residuals are not strictly decreasing");
                    break;
                }
            if (outs.size() < 2) why.push_back("monotone contract needs at least 2 levels");
        }
        const LevelOut& last = outs.back();
        if (c.residual_max && !(last.val.residual <= *c.residual_max * tol_scale))
            why.push_back("final residual " + fmt_g(last.val.residual) + " above bound " +
                          fmt_g(*c.residual_max * tol_scale));
        if (c.residual_rel) {
            const double bound = *c.residual_rel * tol_scale * norm(last.val.rhs);
            if (!(last.val.residual <= bound))
                why.push_back("final residual " + fmt_g(last.val.residual) +
                              " above relative bound " + fmt_g(bound));
        }
        if (c.order_min || c.order_max) {
            if (!last.order)
                why.push_back("order contract needs at least 2 completed levels");
            else {
                if (c.order_min && !(*last.order >= *c.order_min))
                    why.push_back("final order " + fmt_g(*last.order) + " below " +
                                  fmt_g(*c.order_min));
                if (c.order_max && !(*last.order <= *c.order_max))
                    why.push_back("final order " + fmt_g(*last.order) + " above " +
                                  fmt_g(*c.order_max));
            }
        }
    }
    if (why.empty()) return {};
    std::string joined = why[0];
    for (std::size_t i = 1; i < why.size(); ++i) joined += "; " + why[i];
    return joined;
}

}  // namespace

// ---------------------------------------------------------------------------
// public surface
// ---------------------------------------------------------------------------

Config parse_config(const std::string& text) {
    std::vector<RawSection> sections;
    std::map<std::string, std::size_t> index;

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(lineno, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(lineno, "empty key");
        const auto dot = key.find('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == key.size())
            fail(lineno, "keys are <experiment>.<field>, got '" + key + "'");
        const std::string section = key.substr(0, dot);
        const std::string field = key.substr(dot + 1);

        auto [it, fresh] = index.emplace(section, sections.size());
        if (fresh) sections.push_back(RawSection{section, lineno, {}});
        auto& sec = sections[it->second];
        if (!sec.fields.emplace(field, Field{split_ws(value), lineno}).second)
            fail(lineno, "duplicate field '" + key + "'");
    }
    if (sections.empty()) throw ConfigError("config defines no experiments");

    Config cfg;
    for (const auto& sec : sections) cfg.experiments.push_back(build_experiment(sec));
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

RunReport run(const Config& cfg, double tol_scale) {
    RunReport rep;
    rep.csv =
        "# schema=1\n"
        "identity,n_vol,m_surf,n_quad,h_fd,lhs_w,lhs_x,lhs_y,lhs_z,rhs_w,rhs_x,rhs_y,rhs_z,"
        "residual,order,status\n";
    rep.all_pass = true;

    for (const auto& e : cfg.experiments) {
        std::vector<LevelOut> outs;
        for (const auto& L : e.levels) {
            LevelOut out;
            try {
                out.val = run_level(e, L);
                out.ok = true;
            } catch (const std::exception& ex) {
                out.error = ex.what();
            }
            if (out.ok && !outs.empty() && outs.back().ok) {
                const double prev = outs.back().val.residual;
                if (prev > 0.0 && std::isfinite(prev) && out.val.residual >= 0.0 &&
                    std::isfinite(out.val.residual))
                    out.order = idn::measured_order(prev, out.val.residual);
            }
            rep.csv += csv_row(e.identity, L, out);
            outs.push_back(std::move(out));
        }
        const std::string why = evaluate_contract(e, outs, tol_scale);
        if (why.empty()) {
            rep.summary.push_back(e.name + " [" + e.identity + "]: PASS");
        } else {
            rep.summary.push_back(e.name + " [" + e.identity + "]: FAIL (" + why + ")");
            rep.all_pass = false;
        }
    }
    return rep;
}

std::string identity_catalogue() {
    std::string out;
    for (const auto& ent : kCatalogue) {
        std::string name = ent.name;
        name.resize(18, ' ');
        out += name + ent.what + '\n';
    }
    return out;
}

const std::vector<std::string>& identity_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& ent : kCatalogue) v.emplace_back(ent.name);
        return v;
    }();
    return names;
}

}  // namespace quatfrac::runner
