#include "cli.hpp"

#include "manifest.hpp"

#include "arblens/analytics.hpp"
#include "arblens/detector.hpp"
#include "arblens/error.hpp"
#include "arblens/ingest.hpp"
#include "arblens/scan.hpp"
#include "arblens/simulator.hpp"
#include "arblens/validation.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace arblens::cli {

namespace fs = std::filesystem;

namespace {

enum class Level { Error, Warn, Info, Debug };

// Verbosity from ARB_LENS_LOG: error, warn (default), info or debug.
class Log {
public:
    explicit Log(std::ostream& err) : err_(err) {
        const char* env = std::getenv("ARB_LENS_LOG");
        if (!env) return;
        const std::string v(env);
        if (v == "error") {
            level_ = Level::Error;
        } else if (v == "warn") {
            level_ = Level::Warn;
        } else if (v == "info") {
            level_ = Level::Info;
        } else if (v == "debug") {
            level_ = Level::Debug;
        } else {
            warn("ARB_LENS_LOG='" + v + "' is not one of error, warn, info, debug");
        }
    }
    void error(const std::string& m) { emit(Level::Error, "error", m); }
    void warn(const std::string& m) { emit(Level::Warn, "warn", m); }
    void info(const std::string& m) { emit(Level::Info, "info", m); }
    void debug(const std::string& m) { emit(Level::Debug, "debug", m); }

private:
    void emit(Level l, const char* tag, const std::string& m) {
        if (l <= level_) err_ << "arblens: " << tag << ": " << m << '\n';
    }
    std::ostream& err_;
    Level level_ = Level::Warn;
};

struct Options {
    std::string trades;
    std::string books;
    std::string fees;
    std::string spec;
    std::string config;
    std::string universe;
    std::string detections;
    std::string labels;
    std::string out = ".";
    std::optional<TimestampMs> delta_t;
    std::optional<TimestampMs> competition_window;
    std::optional<TimestampMs> exit_window;
    unsigned jobs = 1;
    std::optional<std::uint64_t> seed;
};

class Command {
public:
    Command(std::string name, const Options& o, std::vector<std::string> args, std::ostream& out, std::ostream& err)
        : o_(o), out_(out), log_(err) {
        m_.command = std::move(name);
        m_.args = std::move(args);
    }

    int execute();

private:
    void simulate();
    void detect();
    void scan();
    void analyze();
    void report();
    void validate();

    const ScenarioSpec* spec();
    const Universe& universe();
    FeeSchedule fees();
    DetectorConfig detector_config();
    TradeStream trades(const Universe& u);
    BookStream books(const Universe& u);
    DetectionResult run_detector(const TradeStream& t, const BookStream& b, const DetectorConfig& cfg);
    fs::path output(const std::string& key, const std::string& file);
    void input(const std::string& key, const std::string& path) {
        if (!path.empty()) m_.inputs[key] = path;
    }

    Options o_;
    std::ostream& out_;
    Log log_;
    RunManifest m_;
    std::optional<ScenarioSpec> spec_;
    std::optional<Universe> universe_;
};

const ScenarioSpec* Command::spec() {
    if (o_.spec.empty()) return nullptr;
    if (!spec_) {
        input("spec", o_.spec);
        spec_ = ScenarioSpec::load(o_.spec);
        if (o_.seed) spec_->seed = *o_.seed;
    }
    return &*spec_;
}

const Universe& Command::universe() {
    if (universe_) return *universe_;
    fs::path path = o_.universe;
    if (path.empty() && spec()) {
        universe_ = spec()->universe;
        return *universe_;
    }
    if (path.empty()) {
        for (const auto& near : {o_.trades, o_.books, o_.detections}) {
            if (near.empty()) continue;
            const auto candidate = fs::path(near).parent_path() / "universe.json";
            if (fs::exists(candidate)) {
                path = candidate;
                break;
            }
        }
    }
    if (path.empty()) {
        throw Error(Errc::Io, "no universe: pass --universe, --spec, or keep universe.json next to the inputs");
    }
    log_.info("universe from " + path.string());
    input("universe", path.string());
    universe_ = Universe::load(path);
    return *universe_;
}

FeeSchedule Command::fees() {
    if (!o_.fees.empty()) {
        input("fees", o_.fees);
        return FeeSchedule::load(o_.fees);
    }
    if (spec()) return FeeSchedule::constant(spec()->fees);
    return FeeSchedule::constant(FeeModel{});
}

DetectorConfig Command::detector_config() {
    DetectorConfig cfg;
    if (!o_.config.empty()) {
        input("config", o_.config);
        std::ifstream f(o_.config);
        if (!f) throw Error(Errc::Io, "cannot open " + o_.config);
        nlohmann::json j;
        try {
            f >> j;
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::Parse, o_.config + ": " + e.what());
        }
        cfg = DetectorConfig::from_json(j);
    }
    if (o_.delta_t) cfg.delta_t = *o_.delta_t;
    if (o_.competition_window) cfg.competition_window = *o_.competition_window;
    if (o_.exit_window) cfg.exit_window = *o_.exit_window;
    cfg.validate();
    return cfg;
}

TradeStream Command::trades(const Universe& u) {
    input("trades", o_.trades);
    StageTimer t(m_, "load_trades");
    auto s = load_trades(fs::path(o_.trades), u);
    log_.info("loaded " + std::to_string(s.size()) + " trades");
    return s;
}

BookStream Command::books(const Universe& u) {
    if (o_.books.empty()) {
        log_.info("no order books; reference prices fall back to VWAP");
        return {};
    }
    input("books", o_.books);
    StageTimer t(m_, "load_books");
    auto b = load_books(fs::path(o_.books), u);
    for (const auto& w : b.warnings()) log_.warn(w);
    log_.info("loaded " + std::to_string(b.size()) + " book snapshots");
    return b;
}

DetectionResult Command::run_detector(const TradeStream& t, const BookStream& b, const DetectorConfig& cfg) {
    const auto schedule = fees();
    m_.config["detector"] = cfg.to_json();
    m_.config["fees"] = schedule.to_json();
    StageTimer timer(m_, "detect");
    const Detector d(t, b, schedule, cfg);
    auto r = d.run(o_.jobs);
    for (const auto& msg : r.diagnostics) log_.debug(msg);
    log_.info(std::to_string(r.sequences.size()) + " sequences, " + std::to_string(r.clusters.size()) + " clusters");
    return r;
}

fs::path Command::output(const std::string& key, const std::string& file) {
    fs::create_directories(o_.out);
    const auto p = fs::path(o_.out) / file;
    m_.outputs[key] = p;
    return p;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(Errc::Io, "cannot write " + p.string());
    return f;
}

void Command::simulate() {
    if (o_.spec.empty()) throw CLI::RequiredError("--spec");
    const ScenarioSpec& s = *spec();
    m_.seed = s.seed;
    m_.config["scenario"] = s.to_json();
    ScenarioResult r;
    {
        StageTimer t(m_, "simulate");
        r = run_scenario(s);
    }
    StageTimer t(m_, "write");
    fs::create_directories(o_.out);
    const auto files = write_scenario(s, r, o_.out);
    m_.outputs["trades"] = files.trades;
    m_.outputs["books"] = files.books;
    m_.outputs["labels"] = files.labels;
    m_.outputs["universe"] = files.universe;
    auto f = open_out(output("scenario", "scenario.json"));
    f << s.to_json().dump(2) << '\n';
    out_ << r.trades.size() << " trades, " << r.snapshots.size() << " snapshots, " << r.labels.size()
         << " labels written to " << o_.out << '\n';
}

void Command::detect() {
    const auto cfg = detector_config();
    const auto& u = universe();
    const auto t = trades(u);
    const auto b = books(u);
    const auto r = run_detector(t, b, cfg);
    StageTimer timer(m_, "write");
    auto f = open_out(output("detections", "detections.jsonl"));
    write_detections(f, r, trades_digest(t), cfg);
    out_ << r.sequences.size() << " sequences, " << r.clusters.size() << " clusters\n";
}

void Command::scan() {
    if (o_.books.empty()) throw CLI::RequiredError("--books");
    const auto& u = universe();
    const auto b = books(u);
    const auto schedule = fees();
    m_.config["fees"] = schedule.to_json();
    ScanReport r;
    {
        StageTimer t(m_, "scan");
        r = scan_books(u, b, schedule);
    }
    auto f = open_out(output("scan", "scan.jsonl"));
    write_scan(f, r);
    out_ << r.summary_json().dump() << '\n';
}

void Command::analyze() {
    input("detections", o_.detections);
    const auto det = load_detections(o_.detections);
    const auto& u = universe();
    const auto t = trades(u);
    AnalysisReport a;
    {
        StageTimer timer(m_, "analyze");
        a = arblens::analyze(det.result, t, det.trades_digest);
    }
    auto j = open_out(output("analysis", "analysis.json"));
    j << a.to_json().dump(2) << '\n';
    auto txt = open_out(output("report", "report.txt"));
    write_text_report(txt, a);
    for (const char* field : {"triangular_share", "indirect_share"}) {
        auto csv = open_out(output(std::string("daily_") + field, std::string("daily_") + field + ".csv"));
        write_daily_series(csv, a.summary, field);
    }
    auto lt = open_out(output("latency_triangular", "latency_triangular.csv"));
    write_latency_histogram(lt, a.latency.triangular);
    auto li = open_out(output("latency_indirect", "latency_indirect.csv"));
    write_latency_histogram(li, a.latency.indirect);
    write_text_report(out_, a);
}

void Command::report() {
    const auto& u = universe();
    const auto t = trades(u);
    DetectionResult det;
    if (!o_.detections.empty()) {
        input("detections", o_.detections);
        auto file = load_detections(o_.detections);
        if (file.trades_digest != trades_digest(t)) {
            throw Error(Errc::Consistency, "detections were produced from a different trade log");
        }
        det = std::move(file.result);
    } else {
        const auto cfg = detector_config();
        const auto b = books(u);
        det = run_detector(t, b, cfg);
    }
    const auto a = arblens::analyze(det, t);
    std::ostringstream text;
    write_text_report(text, a);
    if (!o_.labels.empty()) {
        input("labels", o_.labels);
        const auto labels = load_labels(o_.labels);
        if (!labels.trades_digest.empty() && labels.trades_digest != trades_digest(t)) {
            throw Error(Errc::Consistency, "labels were produced from a different trade log");
        }
        text << "Validation\n";
        write_validation_table(text, validate_detections(labels.labels, det));
    }
    auto f = open_out(output("report", "report.txt"));
    f << text.str();
    out_ << text.str();
}

void Command::validate() {
    input("labels", o_.labels);
    input("detections", o_.detections);
    const auto labels = load_labels(o_.labels);
    const auto det = load_detections(o_.detections);
    const auto r = validate_detections(labels, det);
    auto f = open_out(output("validation", "validation.json"));
    f << r.to_json().dump(2) << '\n';
    write_validation_table(out_, r);
}

int Command::execute() {
    int code = kExitOk;
    try {
        static const std::map<std::string, void (Command::*)()> kDispatch{
            {"simulate", &Command::simulate}, {"detect", &Command::detect},   {"scan", &Command::scan},
            {"analyze", &Command::analyze},   {"report", &Command::report},   {"validate", &Command::validate}};
        (this->*kDispatch.at(m_.command))();
    } catch (const CLI::Error& e) {
        log_.error(std::string("missing option ") + e.what());
        m_.status = "usage-error";
        m_.error = e.what();
        code = kExitUsage;
    } catch (const std::exception& e) {
        log_.error(e.what());
        m_.status = "error";
        m_.error = e.what();
        code = kExitData;
    }
    try {
        m_.write(o_.out);
    } catch (const std::exception& e) {
        log_.error(std::string("manifest not written: ") + e.what());
        if (code == kExitOk) code = kExitData;
    }
    return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Detects triangular arbitrage and indirect conversions in exchange trade logs.", "arblens"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", ARBLENS_VERSION);
    Options o;

    auto out_dir = [&](CLI::App* s) { s->add_option("--out", o.out, "Output directory (default: current)"); };
    auto universe = [&](CLI::App* s) {
        s->add_option("--universe", o.universe, "universe.json (default: --spec, or next to the inputs)");
        s->add_option("--spec", o.spec, "Scenario file whose universe and fees apply");
    };
    auto detector = [&](CLI::App* s) {
        s->add_option("--books", o.books, "Order book snapshots CSV");
        s->add_option("--fees", o.fees, "Fee schedule JSON");
        s->add_option("--config", o.config, "Detector config JSON");
        s->add_option("--delta-t-ms", o.delta_t, "Max gap between consecutive legs")->check(CLI::PositiveNumber);
        s->add_option("--competition-window-ms", o.competition_window, "Competing-conversion window")
            ->check(CLI::PositiveNumber);
        s->add_option("--exit-window-ms", o.exit_window, "Exit search window")->check(CLI::PositiveNumber);
        s->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::Range(1u, 256u));
    };

    auto* sim = app.add_subcommand("simulate", "Run a scenario and write trades, books and labels");
    sim->add_option("--spec", o.spec, "Scenario JSON")->required();
    sim->add_option("--seed", o.seed, "Override the scenario seed");
    out_dir(sim);

    auto* det = app.add_subcommand("detect", "Detect sequences and competition clusters");
    det->add_option("--trades", o.trades, "Trades CSV")->required();
    universe(det);
    detector(det);
    out_dir(det);

    auto* scan = app.add_subcommand("scan", "Report open triangular cycles in order book snapshots");
    scan->add_option("--books", o.books, "Order book snapshots CSV")->required();
    scan->add_option("--fees", o.fees, "Fee schedule JSON");
    universe(scan);
    out_dir(scan);

    auto* ana = app.add_subcommand("analyze", "Statistics over a detections file");
    ana->add_option("--detections", o.detections, "detections.jsonl")->required();
    ana->add_option("--trades", o.trades, "Trades CSV the detections came from")->required();
    universe(ana);
    out_dir(ana);

    auto* rep = app.add_subcommand("report", "Detect (unless --detections is given) and print a summary");
    rep->add_option("--trades", o.trades, "Trades CSV")->required();
    rep->add_option("--detections", o.detections, "Existing detections.jsonl");
    rep->add_option("--labels", o.labels, "Ground-truth labels to score against");
    universe(rep);
    detector(rep);
    out_dir(rep);

    auto* val = app.add_subcommand("validate", "Score detections against simulator labels");
    val->add_option("--labels", o.labels, "labels.jsonl")->required();
    val->add_option("--detections", o.detections, "detections.jsonl")->required();
    out_dir(val);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "arblens: " << e.what() << "\nRun with --help for usage.\n";
        return kExitUsage;
    }
    const auto* chosen = app.get_subcommands().front();
    return Command(chosen->get_name(), o, args, out, err).execute();
}

}  // namespace arblens::cli
