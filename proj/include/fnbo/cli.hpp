#pragma once

// Command-line front end. runCli() is the whole program; tools/fnbo.cpp only
// forwards argv. Machine output goes to `out` (or --output), progress and
// diagnostics to `err`.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "core.hpp"
#include "device.hpp"
#include "errors.hpp"
#include "figures.hpp"
#include "io.hpp"
#include "noise.hpp"
#include "protocols.hpp"
#include "sde.hpp"

namespace fnbo {

int runCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

namespace cli {

using json = nlohmann::ordered_json;

struct BathOptions {
    double Q = 10.0;
    int baths = 1;
    double gamma = 0.5;
    double T1 = 0.25, T2 = 0.25;
    double cutoff = 1e3;
    std::string stats1 = "quantum", stats2 = "quantum";
    double qdo = 0.0;

    void add(CLI::App* app) {
        app->add_option("--Q", Q, "quality factor Omega/(4 Gamma)")->capture_default_str();
        app->add_option("--baths", baths, "number of baths (1 or 2)")->capture_default_str()->check(CLI::Range(1, 2));
        app->add_option("--gamma", gamma, "ancilla damping share Gamma_1/Gamma (two baths)")->capture_default_str();
        app->add_option("--T1", T1, "bath 1 reduced temperature 2T/Omega")->capture_default_str();
        app->add_option("--T2", T2, "bath 2 reduced temperature")->capture_default_str();
        app->add_option("--cutoff", cutoff, "reduced cutoff Omega_C/Omega")->capture_default_str();
        app->add_option("--stats1", stats1, "bath 1 statistics: quantum|classical")->capture_default_str();
        app->add_option("--stats2", stats2, "bath 2 statistics: quantum|classical")->capture_default_str();
        app->add_option("--qdo", qdo, "frequency-noise strength Q D Omega")->capture_default_str();
    }

    ReducedParams params() const {
        if (baths == 1) return singleBath(Q, T1, cutoff, parseStatistics(stats1), qdo);
        return twoBath(Q, gamma, T1, T2, cutoff, parseStatistics(stats1), parseStatistics(stats2), qdo);
    }
};

/// Canonical config of a parsed subcommand: every option that is given or has
/// a default, except output paths and thread counts.
inline RunConfig recordConfig(const CLI::App* sub, const std::vector<std::string>& path) {
    RunConfig c;
    for (std::size_t i = 0; i < path.size(); ++i) c.subcommand += (i ? " " : "") + path[i];
    std::string flags;
    for (const CLI::Option* o : sub->get_options()) {
        const auto& ln = o->get_lnames();
        if (ln.empty()) {
            if (o->get_positional())
                for (const auto& r : o->results()) c.positional.push_back(r);
            continue;
        }
        const std::string& name = ln.front();
        if (name == "help" || name == "output" || name == "threads" || name == "config") continue;
        if (o->get_expected_min() == 0) {
            if (o->count() > 0) flags += (flags.empty() ? "" : " ") + name;
            continue;
        }
        std::string v;
        if (o->count() > 0) {
            for (const auto& r : o->results()) v += (v.empty() ? "" : " ") + r;
        } else {
            v = o->get_default_str();
            // Vector defaults print as [a,b,c].
            if (v.size() >= 2 && v.front() == '[' && v.back() == ']') {
                v = v.substr(1, v.size() - 2);
                for (auto& ch : v)
                    if (ch == ',') ch = ' ';
            }
        }
        if (!v.empty()) c.options[name] = v;
    }
    if (!flags.empty()) c.options["flags"] = flags;
    return c;
}

inline json toJson(const Estimate& e) { return json{{"mean", e.mean}, {"std_error", e.stdError}}; }

inline json analyticJson(const ReducedParams& rp, bool& unstable) {
    json j;
    const auto eb = meanKineticPotential(rp);
    j["Q"] = rp.Q;
    j["QDOmega"] = rp.qdw;
    j["E0"] = eb.E0;
    j["K"] = eb.meanK;
    j["V"] = eb.meanV;
    j["R"] = eb.ratioR;
    j["F"] = eb.factorF;
    j["R_H"] = eb.heisenbergRH;
    j["errors"] = {{"K", eb.errK}, {"V", eb.errV}, {"R", eb.errR}, {"F", eb.errF}};
    const auto m = magnification(rp.qdw);
    unstable = !m.stable;
    if (!m.stable) {
        j["stable"] = false;
        return j;
    }
    j["stable"] = true;
    j["W"] = m.value;
    const auto s = drivenMoments(rp);
    const auto h = heatCurrents(rp);
    j["E"] = s.energy;
    j["x2"] = s.x2;
    j["p2"] = s.p2;
    j["xp"] = s.xp;
    j["Dc"] = s.bathDc;
    j["Ds"] = s.bathDs;
    j["J0"] = h.J0;
    j["J"] = h.J;
    j["work_power"] = h.workPower;
    j["residuals"] = {{"sum_J0", h.sumRuleResidual},
                      {"amplification", h.amplificationResidual},
                      {"J_minus_work", h.balanceResidual},
                      {"J_plus_work", h.balanceResidualAlt}};
    return j;
}

inline Table analyticTable(const ReducedParams& rp) {
    Table t;
    bool unstable = false;
    const auto j = analyticJson(rp, unstable);
    t.columns = {"Q", "QDOmega", "E0", "K", "V", "R", "F", "R_H", "W", "E"};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    t.rows.push_back({rp.Q, rp.qdw, j["E0"].get<double>(), j["K"].get<double>(), j["V"].get<double>(),
                      j["R"].get<double>(), j["F"].get<double>(), j["R_H"].get<double>(),
                      unstable ? nan : j["W"].get<double>(), unstable ? nan : j["E"].get<double>()});
    return t;
}

/// Output sink: --output file or the caller's stream.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw ConfigError("cannot open output file '" + path + "'");
            os_ = file_.get();
        }
    }
    std::ostream& operator*() { return *os_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* os_;
};

inline std::string fmt(double v, const char* spec = "%.4g") {
    char b[64];
    std::snprintf(b, sizeof b, spec, v);
    return b;
}

inline void printBudget(std::ostream& os, const device::NoiseBudget& b) {
    os << "S_min = " << fmt(b.Smin) << " s\n";
    os << "L     = " << fmt(b.level) << " dB\n";
    os << "Phi   = " << fmt(b.enhancement) << " dB\n";
    os << "D_min = " << fmt(b.Dmin) << " s\n";
    os << "D     = " << fmt(b.D) << " s\n";
}

inline json budgetJson(const device::NoiseBudget& b) {
    return json{{"S_min", b.Smin}, {"level_dB", b.level}, {"enhancement_dB", b.enhancement},
                {"D_min", b.Dmin}, {"D", b.D}};
}

inline json slopeJson(const SlopeEstimate& s) {
    return json{{"F", s.F},           {"F_error", s.FError}, {"ci95", {s.ciLow, s.ciHigh}},
                {"intercept", s.intercept}, {"intercept_error", s.interceptError},
                {"chi2", s.chi2},     {"W", s.W}};
}

}  // namespace cli

inline int runCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    using cli::json;
    CLI::App app{"Frequency-noise-driven Brownian oscillator toolkit"};
    app.set_config("--config", "", "INI file; [subcommand] sections set subcommand options");
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("fnbo ") + kToolVersion);
    std::string output, format = "json";
    unsigned threads = 0;

    // analytic
    auto* analytic = app.add_subcommand("analytic", "steady-state energies, virial ratio, heat currents");
    cli::BathOptions aBath;
    aBath.add(analytic);
    analytic->add_option("--format", format, "json|csv")->capture_default_str()->check(CLI::IsMember({"json", "csv"}));
    analytic->add_option("-o,--output", output, "output file");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Langevin Monte Carlo ensemble");
    cli::BathOptions sBath;
    sBath.Q = 1.0;
    sBath.cutoff = 50.0;
    sBath.add(simulate);
    double dt = 1e-3, burnIn = 0.0, window = 0.0;
    std::size_t ensemble = 2000;
    std::uint64_t seed = 1;
    std::string scheme = "heun";
    bool checkAnalytic = false, allowUnstable = false;
    simulate->add_option("--dt", dt, "time step (1/Omega)")->capture_default_str();
    simulate->add_option("--burn-in", burnIn, "burn-in time; 0 selects 20/Gamma")->capture_default_str();
    simulate->add_option("--window", window, "averaging window; 0 selects 100/Gamma")->capture_default_str();
    simulate->add_option("--ensemble", ensemble, "number of trajectories")->capture_default_str();
    simulate->add_option("--seed", seed, "base seed")->capture_default_str();
    simulate->add_option("--scheme", scheme, "heun|euler")->capture_default_str();
    simulate->add_flag("--check-analytic", checkAnalytic, "compare <x^2>, <p^2> with quadrature (3 sigma)");
    simulate->add_flag("--allow-unstable", allowUnstable, "simulate even when QDOmega >= 1");
    simulate->add_option("--threads", threads, "worker threads (default FNBO_THREADS or all cores)");
    simulate->add_option("-o,--output", output, "output file");

    // figure
    auto* figure = app.add_subcommand("figure", "figure data tables (CSV)");
    std::string figName;
    figure->add_option("name", figName, "fig2|fig3a|fig3b|fig3c")->required()->check(
        CLI::IsMember({"fig2", "fig3a", "fig3b", "fig3c"}));
    Fig2Options f2;
    Fig3aOptions f3a;
    Fig3bOptions f3b;
    Fig3cOptions f3c;
    std::vector<double> figQ = f2.Q;
    double figCutoff = 1e3;
    std::size_t figPoints = 0, figN1 = 0, figN2 = 0;
    figure->add_option("--Q", figQ, "quality factors (fig2) or the single Q (fig3b, fig3c)")->capture_default_str();
    figure->add_option("--cutoff", figCutoff, "reduced cutoff")->capture_default_str();
    figure->add_option("--points", figPoints, "temperature points (fig2, fig3b); 0 keeps the default")->capture_default_str();
    figure->add_option("--n1", figN1, "first grid size (fig3a: Q, fig3c: gamma); 0 keeps the default")->capture_default_str();
    figure->add_option("--n2", figN2, "second grid size (fig3a: D, fig3c: T2/T1); 0 keeps the default")->capture_default_str();
    figure->add_option("--threads", threads, "worker threads");
    figure->add_option("-o,--output", output, "output file");

    // replay
    auto* replay = app.add_subcommand("replay", "re-run the configuration embedded in a CSV and compare");
    std::string replayPath;
    replay->add_option("file", replayPath, "CSV written by analytic or figure")->required()->check(CLI::ExistingFile);

    // protocol
    auto* protocol = app.add_subcommand("protocol", "two-bath quantum/classical test of a target bath");
    ProtocolConfig pc;
    std::string target = "quantum", source = "analytic";
    protocol->add_option("--Q", pc.Q, "quality factor")->capture_default_str();
    protocol->add_option("--gamma", pc.gamma, "ancilla damping share")->capture_default_str();
    protocol->add_option("--T1", pc.t1, "ancilla reduced temperature")->capture_default_str();
    protocol->add_option("--T2", pc.t2, "target reduced temperature")->capture_default_str();
    protocol->add_option("--cutoff", pc.cutoff, "reduced cutoff")->capture_default_str();
    protocol->add_option("--target", target, "statistics of the simulated target: quantum|classical")->capture_default_str();
    protocol->add_option("--W", pc.magnifications, "magnification values of the D sweep")->capture_default_str();
    protocol->add_option("--repetitions", pc.repetitions, "measurements per D value")->capture_default_str();
    protocol->add_option("--source", source, "analytic|mc")->capture_default_str()->check(CLI::IsMember({"analytic", "mc"}));
    protocol->add_option("--noise", pc.relativeNoise, "relative noise of analytic measurements")->capture_default_str();
    protocol->add_option("--ensemble", pc.mc.ensembleSize, "mc: trajectories per measurement")->capture_default_str();
    protocol->add_option("--dt", pc.mc.dt, "mc: time step")->capture_default_str();
    protocol->add_option("--seed", pc.seed, "seed")->capture_default_str();
    protocol->add_option("--threads", threads, "worker threads");
    protocol->add_option("-o,--output", output, "output file for the JSON report");

    // thermometry
    auto* thermo = app.add_subcommand("thermometry", "linearized thermometry of the target bath");
    double thQ = 10.0, thGamma = 0.3, thT1 = 1.5, thFrac = 0.05, thW = 10.0, thCutoff = 1e3;
    std::vector<double> thE, thE0, thJ1, thJ10;
    thermo->add_option("--Q", thQ, "quality factor")->capture_default_str();
    thermo->add_option("--gamma", thGamma, "ancilla damping share")->capture_default_str();
    thermo->add_option("--T1", thT1, "ancilla reduced temperature")->capture_default_str();
    thermo->add_option("--dT-frac", thFrac, "forward model: true dT/T1")->capture_default_str();
    thermo->add_option("--W", thW, "magnification")->capture_default_str();
    thermo->add_option("--cutoff", thCutoff, "reduced cutoff")->capture_default_str();
    thermo->add_option("--E", thE, "measured E [error]; replaces the forward model")->expected(1, 2);
    thermo->add_option("--E0", thE0, "measured E at D = 0 [error]")->expected(1, 2);
    thermo->add_option("--J1", thJ1, "measured J_1 [error]")->expected(1, 2);
    thermo->add_option("--J10", thJ10, "measured J_1 at D = 0 [error]")->expected(1, 2);
    thermo->add_option("-o,--output", output, "output file");

    // device
    auto* dev = app.add_subcommand("device", "platform noise budgets (SI units)");
    dev->require_subcommand(1);
    std::string devFormat = "text";
    dev->add_option("--format", devFormat, "text|json")->capture_default_str()->check(CLI::IsMember({"text", "json"}));
    auto* tw = dev->add_subcommand("tweezers", "optical tweezers with shot-noise-limited power");
    double P0 = 0.5, lambda = 1.55e-6, level = 0.0;
    tw->add_option("-P,--power", P0, "beam power P0 (W)")->capture_default_str();
    tw->add_option("-l,--wavelength", lambda, "wavelength (m)")->capture_default_str();
    tw->add_option("-L,--level", level, "noise level over the floor (dB)")->capture_default_str();
    auto* paul = dev->add_subcommand("paul", "ion in a Paul trap with voltage noise");
    double C = 10e-12, V0 = -0.1, ma = 0.0, mq = 0.0, phiOverride = std::numeric_limits<double>::quiet_NaN();
    std::string component = "dc";
    paul->add_option("-C,--capacitance", C, "electrode capacitance (F)")->capture_default_str();
    paul->add_option("-V,--voltage", V0, "voltage of the noisy component (V)")->capture_default_str();
    paul->add_option("-a", ma, "Mathieu a")->capture_default_str();
    paul->add_option("-q", mq, "Mathieu q")->capture_default_str();
    paul->add_option("--component", component, "dc|ac")->capture_default_str()->check(CLI::IsMember({"dc", "ac"}));
    paul->add_option("--phi", phiOverride, "prescribed enhancement Phi (dB) instead of (a, q)");
    paul->add_option("-L,--level", level, "noise level over the floor (dB)")->capture_default_str();
    auto* cav = dev->add_subcommand("cavity", "cavity mode with a thermally moving wall");
    double cg = 1e3, cw0 = 1e7, cW = 1e5, cT = 300.0, cm = 1e-12;
    cav->add_option("--damping", cg, "wall damping gamma (rad/s)")->capture_default_str();
    cav->add_option("--omega0", cw0, "wall frequency (rad/s)")->capture_default_str();
    cav->add_option("--Omega", cW, "system frequency (rad/s)")->capture_default_str();
    cav->add_option("--temperature", cT, "wall temperature (K)")->capture_default_str();
    cav->add_option("--mass", cm, "wall mass (kg)")->capture_default_str();

    // noise-dump
    auto* dump = app.add_subcommand("noise-dump", "write a sampled noise process (binary, little-endian)");
    cli::BathOptions nBath;
    nBath.Q = 1.0;
    nBath.cutoff = 50.0;
    nBath.add(dump);
    double ndt = 1e-3;
    std::size_t nSamples = 1 << 18;
    std::string generator = "spectral";
    std::uint64_t nSeed = 1;
    dump->add_option("--dt", ndt, "sample spacing")->capture_default_str();
    dump->add_option("-n,--samples", nSamples, "number of samples")->capture_default_str();
    dump->add_option("--seed", nSeed, "seed")->capture_default_str();
    dump->add_option("--generator", generator, "spectral|mode-sum|multiplicative")->capture_default_str()->check(
        CLI::IsMember({"spectral", "mode-sum", "multiplicative"}));
    dump->add_option("-o,--output", output, "output file (required)")->required();

    std::vector<std::string> argvStore{"fnbo"};
    argvStore.insert(argvStore.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argvStore) argv.push_back(s.data());

    try {
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return 0;
        } catch (const CLI::CallForVersion& e) {
            out << e.what() << "\n";
            return 0;
        } catch (const CLI::ParseError& e) {
            err << "error: " << e.what() << "\n";
            return static_cast<int>(ExitCode::InvalidConfig);
        }

        if (*analytic) {
            const auto rp = aBath.params();
            bool unstable = false;
            cli::Sink sink(output, out);
            if (format == "csv") {
                auto cfg = cli::recordConfig(analytic, {"analytic"});
                const auto t = cli::analyticTable(rp);
                writeCsv(*sink, t, cfg);
                unstable = !magnification(rp.qdw).stable;
            } else {
                *sink << cli::analyticJson(rp, unstable).dump(2) << "\n";
            }
            if (unstable) {
                err << "unstable: QDOmega = " << rp.qdw << " >= 1\n";
                return static_cast<int>(ExitCode::Unstable);
            }
            return 0;
        }

        if (*simulate) {
            const auto rp = sBath.params();
            IntegratorConfig ic;
            ic.dt = dt;
            const double g = rp.totalDamping();
            ic.burnIn = burnIn > 0.0 ? burnIn : 20.0 / g;
            ic.tEnd = ic.burnIn + (window > 0.0 ? window : 100.0 / g);
            ic.ensembleSize = ensemble;
            ic.baseSeed = seed;
            ic.scheme = parseScheme(scheme);
            ic.allowUnstable = allowUnstable;
            ic.threads = threads;
            if (!magnification(rp.qdw).stable && !allowUnstable) {
                err << "unstable: QDOmega = " << rp.qdw << " >= 1, no steady state\n";
                return static_cast<int>(ExitCode::Unstable);
            }
            err << "simulating " << ensemble << " trajectories of " << std::llround(ic.tEnd / ic.dt)
                << " steps\n";
            const auto r = runEnsemble(ic, rp);
            json j;
            j["config"] = cli::recordConfig(simulate, {"simulate"}).canonical();
            j["trajectories"] = r.trajectories;
            j["tripped"] = r.tripped;
            const auto& m = r.moments;
            j["moments"] = {{"x2", cli::toJson(m.x2)},     {"p2", cli::toJson(m.p2)},
                            {"xp", cli::toJson(m.xp)},     {"xi1p", cli::toJson(m.xi1p)},
                            {"xi2p", cli::toJson(m.xi2p)}, {"phixp", cli::toJson(m.phixp)},
                            {"energy", cli::toJson(m.energy)}};
            const auto& c = r.currents;
            j["currents"] = {{"J1", cli::toJson(c.J1)},
                             {"J2", cli::toJson(c.J2)},
                             {"work_power", cli::toJson(c.workPower)},
                             {"J_sum", cli::toJson(c.currentSum)},
                             {"J_minus_work", cli::toJson(c.balanceResidual)},
                             {"J_plus_work", cli::toJson(c.balanceResidualAlt)}};
            int code = 0;
            if (!magnification(rp.qdw).stable) code = static_cast<int>(ExitCode::Unstable);
            if (checkAnalytic && code == 0) {
                const auto s = drivenMoments(rp);
                const double zx = (m.x2.mean - s.x2) / m.x2.stdError;
                const double zp = (m.p2.mean - s.p2) / m.p2.stdError;
                const bool pass = std::abs(zx) <= 3.0 && std::abs(zp) <= 3.0;
                j["check"] = {{"x2_analytic", s.x2}, {"p2_analytic", s.p2}, {"z_x2", zx}, {"z_p2", zp},
                              {"pass", pass}};
                err << "check-analytic: z(x2) = " << cli::fmt(zx, "%.2f") << ", z(p2) = " << cli::fmt(zp, "%.2f")
                    << (pass ? "  PASS\n" : "  FAIL\n");
                if (!pass) code = static_cast<int>(ExitCode::NumericalFailure);
            }
            cli::Sink sink(output, out);
            *sink << j.dump(2) << "\n";
            return code;
        }

        if (*figure) {
            Table t;
            if (figName == "fig2") {
                f2.Q = figQ;
                f2.cutoff = figCutoff;
                if (figPoints) f2.points = figPoints;
                f2.threads = threads;
                t = fig2(f2);
            } else if (figName == "fig3a") {
                f3a.cutoff = figCutoff;
                if (figN1) f3a.nQ = figN1;
                if (figN2) f3a.nD = figN2;
                f3a.threads = threads;
                t = fig3a(f3a);
            } else if (figName == "fig3b") {
                f3b.Q = figQ.front();
                f3b.cutoff = figCutoff;
                if (figPoints) f3b.points = figPoints;
                f3b.threads = threads;
                t = fig3b(f3b);
            } else {
                f3c.Q = figQ.front();
                f3c.cutoff = figCutoff;
                if (figN1) f3c.nGamma = figN1;
                if (figN2) f3c.nRatio = figN2;
                f3c.threads = threads;
                t = fig3c(f3c);
            }
            auto cfg = cli::recordConfig(figure, {"figure"});
            cli::Sink sink(output, out);
            writeCsv(*sink, t, cfg);
            return 0;
        }

        if (*replay) {
            std::ifstream is(replayPath);
            const auto f = readCsv(is);
            const auto cfg = f.config();
            auto a = cfg.toArgs();
            // Subcommand paths are stored as one space-separated token.
            std::vector<std::string> argsOut;
            std::istringstream sub(a.front());
            std::string tok;
            while (sub >> tok) argsOut.push_back(tok);
            argsOut.insert(argsOut.end(), a.begin() + 1, a.end());
            std::ostringstream again;
            const int rc = runCli(argsOut, again, err);
            if (rc != 0 && rc != static_cast<int>(ExitCode::Unstable)) return rc;
            std::istringstream back(again.str());
            const auto g = readCsv(back);
            const bool same = identicalTables(f.table, g.table) && g.meta.at("config_hash") == f.meta.at("config_hash");
            out << (same ? "identical" : "DIFFERENT") << "\n";
            return same ? 0 : static_cast<int>(ExitCode::NumericalFailure);
        }

        if (*protocol) {
            pc.target = parseStatistics(target);
            pc.source = source == "mc" ? MeasurementSource::MonteCarlo : MeasurementSource::Analytic;
            pc.mc.threads = threads;
            err << "running protocol (" << source << " measurements)\n";
            const auto r = twoBathProtocol(pc);
            json j;
            j["config"] = cli::recordConfig(protocol, {"protocol"}).canonical();
            j["ringdown"] = {{"omega", r.omega},
                             {"Gamma1", r.damping1},
                             {"Gamma2", r.damping2},
                             {"Q", r.Q},
                             {"gamma", r.gamma},
                             {"ancilla_residual", r.ancillaFit.residualNorm},
                             {"full_residual", r.fullFit.residualNorm}};
            j["E0"] = {{"mean", r.E0}, {"std_error", r.E0Error}};
            j["J1_0"] = {{"mean", r.J10}, {"std_error", r.J10Error}};
            j["energy_slope"] = cli::slopeJson(r.energySlope);
            j["current_slope"] = cli::slopeJson(r.currentSlope);
            j["F_quantum"] = r.FQuantum;
            j["F_classical"] = r.FClassical;
            j["z_quantum"] = r.zQuantum;
            j["z_classical"] = r.zClassical;
            j["log_likelihood_margin"] = r.logLikelihoodMargin;
            j["classification"] = r.classification;
            std::ostringstream summary;
            summary << "Omega = " << cli::fmt(r.omega, "%.6f") << ", Gamma1 = " << cli::fmt(r.damping1, "%.6g")
                    << ", Gamma2 = " << cli::fmt(r.damping2, "%.6g") << "\n"
                    << "F fit = " << cli::fmt(r.energySlope.F, "%.5f") << " +/- "
                    << cli::fmt(r.energySlope.FError, "%.2g") << " (quantum " << cli::fmt(r.FQuantum, "%.5f")
                    << ", classical " << cli::fmt(r.FClassical, "%.5f") << ")\n"
                    << "classification: " << r.classification << " (margin "
                    << cli::fmt(r.logLikelihoodMargin, "%.3g") << ")\n";
            if (output.empty()) {
                out << j.dump(2) << "\n";
                err << summary.str();
            } else {
                cli::Sink sink(output, out);
                *sink << j.dump(2) << "\n";
                out << summary.str();
            }
            return 0;
        }

        if (*thermo) {
            const auto cal = calibrateThermometry(thQ, thGamma, thT1, thCutoff);
            ThermometryMeasurement m;
            const bool supplied = !thE.empty() || !thJ1.empty();
            double truth = std::numeric_limits<double>::quiet_NaN();
            if (supplied) {
                m.W = thW;
                m.damping1 = thGamma / (4.0 * thQ);
                auto take = [](const std::vector<double>& v, std::optional<double>& val, double& e) {
                    if (v.empty()) return;
                    val = v[0];
                    e = v.size() > 1 ? v[1] : 0.0;
                };
                take(thE, m.E, m.EError);
                take(thE0, m.E0, m.E0Error);
                take(thJ1, m.J1, m.J1Error);
                take(thJ10, m.J10, m.J10Error);
            } else {
                truth = thFrac * thT1;
                m = thermometryForward(cal, truth, thW);
            }
            const auto r = thermometry(m, cal);
            json j;
            j["config"] = cli::recordConfig(thermo, {"thermometry"}).canonical();
            j["calibration"] = {{"E0", cal.E0}, {"F", cal.F}, {"dR_dT", cal.dRdT}, {"gamma", cal.gamma},
                                {"W", thW}};
            if (!supplied) j["dT_true"] = truth;
            j["dT_energy"] = {{"value", r.dTEnergy}, {"error", r.dTEnergyError}};
            j["dT_current"] = {{"value", r.dTCurrent}, {"error", r.dTCurrentError}};
            j["dT_energy_leading_order"] = r.dTEnergyLeadingOrder;
            j["dT_current_leading_order"] = r.dTCurrentLeadingOrder;
            j["valid"] = r.valid;
            j["routes_agree"] = r.routesAgree;
            cli::Sink sink(output, out);
            *sink << j.dump(2) << "\n";
            if (!r.valid) err << "warning: |dT|/T1 > 0.2, outside the linearized regime\n";
            return 0;
        }

        if (*dev) {
            json j;
            if (*tw) {
                const auto b = device::tweezersD(P0, lambda, level);
                if (devFormat == "json") j = cli::budgetJson(b);
                else cli::printBudget(out, b);
            } else if (*paul) {
                const auto comp = component == "dc" ? device::PaulComponent::Dc : device::PaulComponent::Ac;
                const auto b = std::isnan(phiOverride) ? device::paulTrapD(C, V0, ma, mq, comp, level)
                                                       : device::paulTrapFromEnhancement(C, V0, phiOverride, level);
                if (devFormat == "json") j = cli::budgetJson(b);
                else cli::printBudget(out, b);
            } else {
                const auto c = device::cavityWallBound(cg, cw0, cW, cT, cm);
                if (devFormat == "json") {
                    j = {{"bound_DOmega", c.bound}, {"kT_over_mc2", c.thermalFactor},
                         {"two_gamma_over_omega0", c.dampingFactor}, {"Omega_over_omega0", c.frequencyFactor},
                         {"suitable", c.suitable}, {"note", c.note}};
                } else {
                    out << "D*Omega << " << cli::fmt(c.bound) << "\n";
                    out << "suitable: " << (c.suitable ? "yes" : "no") << " (" << c.note << ")\n";
                }
            }
            if (devFormat == "json") out << j.dump(2) << "\n";
            return 0;
        }

        if (*dump) {
            SampledProcess p;
            std::uint64_t specHash = 0;
            const auto rp = nBath.params();
            if (generator == "multiplicative") {
                p = sampleMultiplicativeNoise(rp.noiseStrength(), ndt, nSamples, nSeed);
                specHash = fnv1a("multiplicative;D=" + formatDouble(rp.noiseStrength()) + ";dt=" + formatDouble(ndt));
            } else if (generator == "spectral") {
                BathNoiseSpec s;
                s.bath = rp.baths[0];
                s.damping = rp.damping(0);
                s.totalDamping = rp.totalDamping();
                s.dt = ndt;
                s.nSamples = nSamples;
                s.seed = nSeed;
                p = synthesizeBathNoise(s);
                specHash = fnv1a(canonical(s));
            } else {
                MicroBathSpec ms;
                ms.bath = rp.baths[0];
                ms.damping = rp.damping(0);
                ms.initial = rp.baths[0].statistics == BathStatistics::Quantum ? InitialStatistics::WignerQuantum
                                                                              : InitialStatistics::ClassicalThermal;
                p = microscopicBathForce(ms, ndt, nSamples, nSeed);
                specHash = fnv1a("mode-sum;" + cli::recordConfig(dump, {"noise-dump"}).canonical());
            }
            cli::Sink sink(output, out);
            writeProcessBinary(*sink, p, specHash);
            err << "wrote " << p.samples.size() << " samples (" << p.generatorId << ") to " << output << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        err << "invalid configuration: " << e.what() << "\n";
        return static_cast<int>(ExitCode::InvalidConfig);
    } catch (const UnstableError& e) {
        err << "unstable: " << e.what() << "\n";
        return static_cast<int>(ExitCode::Unstable);
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return static_cast<int>(ExitCode::NumericalFailure);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::NumericalFailure);
    }
    return static_cast<int>(ExitCode::InvalidConfig);
}

}  // namespace fnbo
