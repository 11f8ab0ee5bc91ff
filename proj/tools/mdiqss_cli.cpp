// Command-line front end: single-point rate reports, synchronization and
// key-rate sweeps (CSV), Monte Carlo validation, maximal-distance and
// loop-survival-threshold solvers.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mdiqss/decoy.hpp"
#include "mdiqss/detail/format.hpp"
#include "mdiqss/keyrate.hpp"
#include "mdiqss/montecarlo.hpp"
#include "mdiqss/params.hpp"
#include "mdiqss/sync.hpp"

namespace {

using mdiqss::detail::format_double;
using mdiqss::detail::format_int;

struct CommonOptions {
    std::string config_path;
    std::string out_path = "stdout";
    std::string convention = "literal";
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_convention) {
    cmd->add_option("--config", opt.config_path,
                    "parameter file (key = value lines, '#' comments)");
    cmd->add_option("--out", opt.out_path,
                    "output destination (path, '-' or 'stdout')");
    if (with_convention)
        cmd->add_option("--q111-convention", opt.convention,
                        "single-photon gain coefficient convention")
            ->check(CLI::IsMember({"literal", "triple"}));
}

mdiqss::params::SimParams load_params(const CommonOptions& opt) {
    if (opt.config_path.empty()) return mdiqss::params::SimParams{};
    return mdiqss::params::load_config(opt.config_path);
}

mdiqss::decoy::Q111Convention convention_of(const CommonOptions& opt) {
    return opt.convention == "triple"
               ? mdiqss::decoy::Q111Convention::TripleThermal
               : mdiqss::decoy::Q111Convention::Literal;
}

/// Output sink: a file or the standard output stream.
class Sink {
  public:
    explicit Sink(const std::string& path) {
        if (path.empty() || path == "-" || path == "stdout") return;
        file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
        if (!*file_)
            throw std::runtime_error("cannot open output file: " + path);
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

  private:
    std::unique_ptr<std::ofstream> file_;
};

struct SweepAxis {
    std::string var = "L_km";
    double start = 0.0;
    double stop = 300.0;
    double step = 1.0;
};

void add_sweep_flags(CLI::App* cmd, SweepAxis& axis,
                     std::vector<std::string>& variants) {
    cmd->add_option("--var", axis.var, "swept variable")
        ->check(CLI::IsMember({"L_km", "T_QM", "N"}));
    cmd->add_option("--start", axis.start, "first swept value");
    cmd->add_option("--stop", axis.stop, "last swept value");
    cmd->add_option("--step", axis.step, "sweep increment (> 0)");
    cmd->add_option("--variant", variants,
                    "baseline model (repeatable): QM_HSPS, "
                    "HSPS_NOQM_NONIDEAL, HSPS_NOQM_IDEAL, WCP_NOQM");
}

std::vector<double> sweep_values(const SweepAxis& axis) {
    if (axis.step <= 0.0)
        throw std::invalid_argument("sweep step must be positive");
    if (axis.start > axis.stop)
        throw std::invalid_argument("sweep start must not exceed stop");
    const auto count = static_cast<std::uint64_t>(
        std::floor((axis.stop - axis.start) / axis.step + 1e-9));
    std::vector<double> values;
    values.reserve(count + 1);
    for (std::uint64_t i = 0; i <= count; ++i)
        values.push_back(axis.start + static_cast<double>(i) * axis.step);
    return values;
}

/// Applies one swept value to a parameter copy and returns the distance at
/// which to evaluate.
double apply_axis(mdiqss::params::SimParams& p, const std::string& var,
                  double value) {
    if (var == "L_km") return value;
    if (var == "T_QM") {
        p.T_QM = value;
        return p.L_km;
    }
    const auto n = static_cast<int>(std::llround(value));
    if (std::abs(value - n) > 1e-9 || n < 1)
        throw std::invalid_argument("N sweep requires integer values >= 1");
    p.N = n;
    return p.L_km;
}

std::vector<mdiqss::keyrate::Variant> parse_variants(
    const std::vector<std::string>& names) {
    std::vector<mdiqss::keyrate::Variant> variants;
    if (names.empty()) {
        variants.push_back(mdiqss::keyrate::Variant::QM_HSPS);
        return variants;
    }
    variants.reserve(names.size());
    for (const std::string& n : names)
        variants.push_back(mdiqss::keyrate::variant_from_name(n));
    return variants;
}

int cmd_sync_prob(const CommonOptions& opt, const SweepAxis& axis,
                  const std::vector<std::string>& variant_names) {
    const mdiqss::params::SimParams base = load_params(opt);
    const auto variants = parse_variants(variant_names);
    const std::vector<double> values = sweep_values(axis);
    Sink sink(opt.out_path);
    std::ostream& out = sink.stream();
    out << "variable,value,variant,Ps3\n";
    for (double value : values) {
        for (auto v : variants) {
            mdiqss::params::SimParams p = base;
            const double L = apply_axis(p, axis.var, value);
            const double ps3 =
                std::min(1.0, mdiqss::keyrate::baseline_sync(v, p, L));
            out << axis.var << ',' << format_double(value) << ','
                << mdiqss::keyrate::variant_name(v) << ','
                << format_double(ps3) << '\n';
        }
    }
    return 0;
}

void print_rate_point(std::ostream& out, const mdiqss::keyrate::RatePoint& pt,
                      const std::string& convention) {
    out << "L_km = " << format_double(pt.L_km) << '\n'
        << "Ps3 = " << format_double(pt.Ps3) << '\n'
        << "Q_X_mu = " << format_double(pt.Q_X_mu) << '\n'
        << "E_X_mu = " << format_double(pt.E_X_mu) << '\n'
        << "Q111_XL = " << format_double(pt.Q111_XL) << '\n'
        << "e111_BZU = " << format_double(pt.e111_BZU) << '\n'
        << "R_raw = " << format_double(pt.R_raw) << '\n'
        << "R = " << format_double(pt.R) << '\n'
        << "R_bits_per_s = " << format_double(pt.R_bits_per_s) << '\n'
        << "q111_convention = " << convention << '\n';
}

int cmd_keyrate(const CommonOptions& opt, double L, bool has_L,
                const std::string& variant_name) {
    const mdiqss::params::SimParams p = load_params(opt);
    const auto variant = mdiqss::keyrate::variant_from_name(variant_name);
    const double L_km = has_L ? L : p.L_km;
    const mdiqss::keyrate::RatePoint pt =
        mdiqss::keyrate::rate_point(p, L_km, variant, convention_of(opt));
    Sink sink(opt.out_path);
    print_rate_point(sink.stream(), pt, opt.convention);
    return 0;
}

int cmd_sweep(const CommonOptions& opt, const SweepAxis& axis,
              const std::vector<std::string>& variant_names) {
    const mdiqss::params::SimParams base = load_params(opt);
    const auto variants = parse_variants(variant_names);
    const auto convention = convention_of(opt);
    const std::vector<double> values = sweep_values(axis);
    Sink sink(opt.out_path);
    std::ostream& out = sink.stream();
    const bool distance_sweep = axis.var == "L_km";
    out << axis.var << ",variant,Ps3,Q_X_mu,E_X_mu,Q111_XL,e111_BZU,R_raw,R\n";
    for (double value : values) {
        for (auto v : variants) {
            mdiqss::params::SimParams p = base;
            const double L = apply_axis(p, axis.var, value);
            const mdiqss::keyrate::RatePoint pt =
                mdiqss::keyrate::rate_point(p, L, v, convention);
            out << format_double(value) << ','
                << mdiqss::keyrate::variant_name(v) << ','
                << format_double(pt.Ps3) << ',' << format_double(pt.Q_X_mu)
                << ',' << format_double(pt.E_X_mu) << ','
                << format_double(pt.Q111_XL) << ','
                << format_double(pt.e111_BZU) << ','
                << format_double(pt.R_raw) << ',' << format_double(pt.R)
                << '\n';
        }
    }
    if (distance_sweep) {
        for (auto v : variants) {
            out << "# max_distance " << mdiqss::keyrate::variant_name(v)
                << " = ";
            try {
                const double md =
                    mdiqss::keyrate::max_distance(base, v, convention);
                out << format_double(md) << " km\n";
            } catch (const mdiqss::keyrate::NoPositiveRate&) {
                out << "none (rate zero at L = 0)\n";
            }
        }
    }
    return 0;
}

int cmd_mc_validate(const CommonOptions& opt, std::uint64_t trials,
                    std::uint64_t seed) {
    const mdiqss::params::SimParams base = load_params(opt);
    Sink sink(opt.out_path);
    std::ostream& out = sink.stream();
    out << "L_km,N,T_QM,trials,analytic,estimate,std_error,z,pass\n";
    bool all_pass = true;
    std::uint64_t index = 0;
    for (const auto& gp : mdiqss::montecarlo::validation_grid()) {
        const std::uint64_t point_seed =
            seed ^ (0xD2B74407B1CE6E93ULL * (index + 1));
        ++index;
        const mdiqss::montecarlo::ValidationRow row =
            mdiqss::montecarlo::validate_grid_point(base, gp, point_seed,
                                                    trials);
        all_pass = all_pass && row.pass;
        out << format_double(gp.L_km) << ',' << format_int(gp.N) << ','
            << format_double(gp.T_QM) << ','
            << format_int(static_cast<long long>(row.trials)) << ','
            << format_double(row.analytic) << ','
            << format_double(row.estimate) << ','
            << format_double(row.std_error) << ',' << format_double(row.z)
            << ',' << (row.pass ? "yes" : "no") << '\n';
    }
    out << "# overall: " << (all_pass ? "PASS" : "FAIL") << '\n';
    return all_pass ? 0 : 1;
}

int cmd_max_distance(const CommonOptions& opt,
                     const std::string& variant_name) {
    const mdiqss::params::SimParams p = load_params(opt);
    const auto variant = mdiqss::keyrate::variant_from_name(variant_name);
    const double md =
        mdiqss::keyrate::max_distance(p, variant, convention_of(opt));
    Sink sink(opt.out_path);
    sink.stream() << "variant = " << variant_name << '\n'
                  << "max_distance_km = " << format_double(md) << '\n';
    return 0;
}

int cmd_tqm_threshold(const CommonOptions& opt, double L_ref) {
    const mdiqss::params::SimParams p = load_params(opt);
    const std::optional<double> threshold =
        mdiqss::keyrate::tqm_threshold(p, L_ref);
    Sink sink(opt.out_path);
    std::ostream& out = sink.stream();
    out << "L_ref_km = " << format_double(L_ref) << '\n';
    if (threshold)
        out << "tqm_threshold = " << format_double(*threshold) << '\n';
    else
        out << "tqm_threshold = none (no crossing in (0, 1])\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Memory-assisted three-party measurement-device-independent "
        "secret-sharing rate calculator"};
    app.require_subcommand(1);

    CommonOptions sync_opt;
    SweepAxis sync_axis;
    std::vector<std::string> sync_variants;
    CLI::App* sync_cmd = app.add_subcommand(
        "sync-prob", "sweep the three-photon synchronization probability");
    add_common(sync_cmd, sync_opt, false);
    add_sweep_flags(sync_cmd, sync_axis, sync_variants);

    CommonOptions kr_opt;
    double kr_L = 0.0;
    std::string kr_variant = "QM_HSPS";
    CLI::App* kr_cmd =
        app.add_subcommand("keyrate", "evaluate one rate point");
    add_common(kr_cmd, kr_opt, true);
    CLI::Option* kr_L_opt =
        kr_cmd->add_option("--L", kr_L, "distance in km (default: config)");
    kr_cmd->add_option("--variant", kr_variant, "baseline model");

    CommonOptions sweep_opt;
    SweepAxis sweep_axis;
    std::vector<std::string> sweep_variants;
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "sweep the key-rate pipeline (CSV)");
    add_common(sweep_cmd, sweep_opt, true);
    add_sweep_flags(sweep_cmd, sweep_axis, sweep_variants);

    CommonOptions mc_opt;
    std::uint64_t mc_trials = 10000000;
    std::uint64_t mc_seed = 20260815;
    CLI::App* mc_cmd = app.add_subcommand(
        "mc-validate",
        "compare the slot simulation with the analytic model on the fixed "
        "grid");
    add_common(mc_cmd, mc_opt, false);
    mc_cmd->add_option("--trials", mc_trials, "trials per grid point");
    mc_cmd->add_option("--seed", mc_seed, "simulation seed");

    CommonOptions md_opt;
    std::string md_variant = "QM_HSPS";
    CLI::App* md_cmd = app.add_subcommand(
        "max-distance", "largest distance with a positive key rate");
    add_common(md_cmd, md_opt, true);
    md_cmd->add_option("--variant", md_variant, "baseline model");

    CommonOptions tq_opt;
    double tq_L_ref = 200.0;
    CLI::App* tq_cmd = app.add_subcommand(
        "tqm-threshold",
        "loop survival at which the memory-assisted synchronization matches "
        "the weak-coherent baseline");
    add_common(tq_cmd, tq_opt, false);
    tq_cmd->add_option("--L-ref", tq_L_ref, "reference distance in km");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sync_cmd->parsed())
            return cmd_sync_prob(sync_opt, sync_axis, sync_variants);
        if (kr_cmd->parsed())
            return cmd_keyrate(kr_opt, kr_L, kr_L_opt->count() > 0,
                               kr_variant);
        if (sweep_cmd->parsed())
            return cmd_sweep(sweep_opt, sweep_axis, sweep_variants);
        if (mc_cmd->parsed()) return cmd_mc_validate(mc_opt, mc_trials, mc_seed);
        if (md_cmd->parsed()) return cmd_max_distance(md_opt, md_variant);
        if (tq_cmd->parsed()) return cmd_tqm_threshold(tq_opt, tq_L_ref);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
