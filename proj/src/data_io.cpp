#include "adgcl/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adgcl/error.hpp"

namespace adgcl::io {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof()) throw IoError("read failure on " + path);
    return ss.str();
}

// Iterates '\n'-separated lines of a buffer, tracking 1-based line numbers.
struct LineReader {
    const std::string& buf;
    std::size_t pos = 0;
    std::size_t line_no = 0;

    bool next(std::string_view& out) {
        if (pos >= buf.size()) return false;
        const std::size_t end = buf.find('\n', pos);
        const std::size_t stop = end == std::string::npos ? buf.size() : end;
        out = std::string_view(buf).substr(pos, stop - pos);
        if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
        pos = stop + 1;
        ++line_no;
        return true;
    }
};

bool blank_or_comment(std::string_view s) {
    for (char c : s) {
        if (c == '#') return true;
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

long long parse_int_token(const char*& p, const std::string& path, std::size_t line) {
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(p, &end, 10);
    if (end == p || errno == ERANGE) throw IoError(path, line, "expected an integer");
    p = end;
    return v;
}

double parse_double_token(const char*& p, const std::string& path, std::size_t line) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(p, &end);
    if (end == p) throw IoError(path, line, "expected a number");
    p = end;
    return v;
}

void expect_end(const char* p, const std::string& path, std::size_t line) {
    while (*p != '\0') {
        if (!std::isspace(static_cast<unsigned char>(*p)))
            throw IoError(path, line, "trailing characters");
        ++p;
    }
}

struct FileWriter {
    std::FILE* f = nullptr;
    std::string path;

    explicit FileWriter(const std::string& p) : path(p) {
        f = std::fopen(p.c_str(), "wb");
        if (f == nullptr) throw IoError("cannot open " + p + " for writing");
    }
    ~FileWriter() {
        if (f != nullptr) std::fclose(f);
    }
    void close() {
        if (std::fclose(f) != 0) {
            f = nullptr;
            throw IoError("write failure on " + path);
        }
        f = nullptr;
    }
};

void print_double(std::FILE* f, double v) { std::fprintf(f, "%.17g", v); }

}  // namespace

std::vector<Edge> load_edge_list(const std::string& path) {
    const std::string buf = read_file(path);
    LineReader lines{buf};
    std::vector<Edge> edges;
    std::string_view line;
    std::string scratch;
    while (lines.next(line)) {
        if (blank_or_comment(line)) continue;
        scratch.assign(line);
        const char* p = scratch.c_str();
        const long long a = parse_int_token(p, path, lines.line_no);
        const long long b = parse_int_token(p, path, lines.line_no);
        expect_end(p, path, lines.line_no);
        if (a < 0 || b < 0) throw IoError(path, lines.line_no, "negative node id");
        if (a > INT32_MAX || b > INT32_MAX) throw IoError(path, lines.line_no, "node id too large");
        edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
    }
    return edges;
}

void write_edge_list(const AttributedGraph& g, const std::string& path) {
    FileWriter out(path);
    for (const auto& [u, v] : g.edge_list()) std::fprintf(out.f, "%d %d\n", u, v);
    out.close();
}

Matrix load_feature_csv(const std::string& path) {
    const std::string buf = read_file(path);
    LineReader lines{buf};
    std::vector<double> values;
    std::size_t cols = 0, rows = 0;
    std::string_view line;
    std::string scratch;
    while (lines.next(line)) {
        if (line.empty() && lines.pos >= buf.size()) break;  // trailing newline
        scratch.assign(line);
        const char* p = scratch.c_str();
        std::size_t this_cols = 0;
        while (true) {
            values.push_back(parse_double_token(p, path, lines.line_no));
            ++this_cols;
            while (*p == ' ' || *p == '\t') ++p;
            if (*p == ',') {
                ++p;
                continue;
            }
            expect_end(p, path, lines.line_no);
            break;
        }
        if (rows == 0)
            cols = this_cols;
        else if (this_cols != cols)
            throw IoError(path, lines.line_no, "row has " + std::to_string(this_cols) +
                                                   " fields, expected " + std::to_string(cols));
        ++rows;
    }
    if (rows == 0) throw IoError("empty feature file " + path);
    Matrix x(rows, cols);
    std::memcpy(x.data(), values.data(), values.size() * sizeof(double));
    return x;
}

void write_feature_csv(const Matrix& x, const std::string& path) {
    FileWriter out(path);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* row = x.row(i);
        for (std::size_t j = 0; j < x.cols(); ++j) {
            if (j) std::fputc(',', out.f);
            print_double(out.f, row[j]);
        }
        std::fputc('\n', out.f);
    }
    out.close();
}

namespace {

AnomalyKind parse_kind(std::string_view s, const std::string& path, std::size_t line) {
    if (s == "none") return AnomalyKind::None;
    if (s == "structural") return AnomalyKind::Structural;
    if (s == "feature") return AnomalyKind::Feature;
    throw IoError(path, line, "unknown anomaly kind '" + std::string(s) + "'");
}

const char* kind_name(AnomalyKind k) {
    switch (k) {
        case AnomalyKind::Structural: return "structural";
        case AnomalyKind::Feature: return "feature";
        default: return "none";
    }
}

}  // namespace

Labels load_labels(const std::string& path, std::int64_t n) {
    const std::string buf = read_file(path);
    LineReader lines{buf};
    std::string_view line;
    if (!lines.next(line) || line != "node_id,label,kind")
        throw IoError(path, 1, "expected header 'node_id,label,kind'");
    Labels out;
    out.label.assign(static_cast<std::size_t>(n), 0);
    out.kind.assign(static_cast<std::size_t>(n), AnomalyKind::None);
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
    std::string scratch;
    std::size_t count = 0;
    while (lines.next(line)) {
        if (line.empty() && lines.pos >= buf.size()) break;
        scratch.assign(line);
        const char* p = scratch.c_str();
        const long long id = parse_int_token(p, path, lines.line_no);
        if (*p != ',') throw IoError(path, lines.line_no, "expected ','");
        ++p;
        const long long lab = parse_int_token(p, path, lines.line_no);
        if (*p != ',') throw IoError(path, lines.line_no, "expected ','");
        ++p;
        const AnomalyKind kind = parse_kind(p, path, lines.line_no);
        if (id < 0 || id >= n) throw IoError(path, lines.line_no, "node id out of range");
        if (lab != 0 && lab != 1) throw IoError(path, lines.line_no, "label must be 0 or 1");
        if (seen[static_cast<std::size_t>(id)])
            throw IoError(path, lines.line_no, "duplicate node id");
        seen[static_cast<std::size_t>(id)] = 1;
        out.label[static_cast<std::size_t>(id)] = static_cast<std::uint8_t>(lab);
        out.kind[static_cast<std::size_t>(id)] = kind;
        ++count;
    }
    if (static_cast<std::int64_t>(count) != n)
        throw IoError("label file " + path + " covers " + std::to_string(count) + " of " +
                      std::to_string(n) + " nodes");
    return out;
}

void write_labels(const Labels& labels, const std::string& path) {
    FileWriter out(path);
    std::fputs("node_id,label,kind\n", out.f);
    for (std::size_t i = 0; i < labels.label.size(); ++i)
        std::fprintf(out.f, "%zu,%d,%s\n", i, static_cast<int>(labels.label[i]),
                     kind_name(labels.kind[i]));
    out.close();
}

std::vector<double> load_scores(const std::string& path, std::int64_t n) {
    const std::string buf = read_file(path);
    LineReader lines{buf};
    std::string_view line;
    if (!lines.next(line) || line != "node_id,score")
        throw IoError(path, 1, "expected header 'node_id,score'");
    std::vector<double> scores(static_cast<std::size_t>(n), 0.0);
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
    std::string scratch;
    std::size_t count = 0;
    while (lines.next(line)) {
        if (line.empty() && lines.pos >= buf.size()) break;
        scratch.assign(line);
        const char* p = scratch.c_str();
        const long long id = parse_int_token(p, path, lines.line_no);
        if (*p != ',') throw IoError(path, lines.line_no, "expected ','");
        ++p;
        const double s = parse_double_token(p, path, lines.line_no);
        expect_end(p, path, lines.line_no);
        if (id < 0 || id >= n) throw IoError(path, lines.line_no, "node id out of range");
        if (seen[static_cast<std::size_t>(id)])
            throw IoError(path, lines.line_no, "duplicate node id");
        seen[static_cast<std::size_t>(id)] = 1;
        scores[static_cast<std::size_t>(id)] = s;
        ++count;
    }
    if (static_cast<std::int64_t>(count) != n)
        throw IoError("score file " + path + " covers " + std::to_string(count) + " of " +
                      std::to_string(n) + " nodes");
    return scores;
}

void write_scores(std::span<const double> scores, const std::string& path) {
    for (double s : scores)
        if (!std::isfinite(s)) throw ParamError("write_scores: non-finite score");
    FileWriter out(path);
    std::fputs("node_id,score\n", out.f);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        std::fprintf(out.f, "%zu,", i);
        print_double(out.f, scores[i]);
        std::fputc('\n', out.f);
    }
    out.close();
}

ScoreWindow load_window(const std::string& path) {
    const std::string buf = read_file(path);
    LineReader lines{buf};
    std::string_view line;
    if (!lines.next(line) || line.rfind("# filled_epochs=", 0) != 0)
        throw IoError(path, 1, "expected '# filled_epochs=<k>'");
    std::string scratch(line.substr(std::strlen("# filled_epochs=")));
    const char* p = scratch.c_str();
    const long long filled = parse_int_token(p, path, 1);
    expect_end(p, path, 1);
    if (!lines.next(line) || line.rfind("node_id,", 0) != 0)
        throw IoError(path, 2, "expected window header");

    std::vector<double> values;
    std::size_t cols = 0, rows = 0;
    while (lines.next(line)) {
        if (line.empty() && lines.pos >= buf.size()) break;
        scratch.assign(line);
        const char* q = scratch.c_str();
        const long long id = parse_int_token(q, path, lines.line_no);
        if (static_cast<std::size_t>(id) != rows)
            throw IoError(path, lines.line_no, "node ids must ascend from 0");
        std::size_t this_cols = 0;
        while (*q == ',') {
            ++q;
            values.push_back(parse_double_token(q, path, lines.line_no));
            ++this_cols;
        }
        expect_end(q, path, lines.line_no);
        if (rows == 0)
            cols = this_cols;
        else if (this_cols != cols)
            throw IoError(path, lines.line_no, "inconsistent column count");
        ++rows;
    }
    if (rows == 0 || cols == 0 || cols % 2 != 0)
        throw IoError("window file " + path + " has no usable rows");
    Matrix data(rows, cols);
    std::memcpy(data.data(), values.data(), values.size() * sizeof(double));
    ScoreWindow sw;
    sw.restore(std::move(data), filled);
    return sw;
}

void write_window(const ScoreWindow& sw, const std::string& path) {
    FileWriter out(path);
    std::fprintf(out.f, "# filled_epochs=%lld\n", static_cast<long long>(sw.filled_epochs()));
    std::fputs("node_id", out.f);
    for (std::int64_t k = 1; k <= sw.window_len(); ++k)
        std::fprintf(out.f, ",s_p_%lld,s_n_%lld", static_cast<long long>(k),
                     static_cast<long long>(k));
    std::fputc('\n', out.f);
    const Matrix& data = sw.data();
    for (std::size_t i = 0; i < data.rows(); ++i) {
        std::fprintf(out.f, "%zu", i);
        for (std::size_t j = 0; j < data.cols(); ++j) {
            std::fputc(',', out.f);
            print_double(out.f, data(i, j));
        }
        std::fputc('\n', out.f);
    }
    out.close();
}

DatasetBundle load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    if (!fs::is_directory(root)) throw IoError("dataset directory not found: " + dir);
    DatasetBundle b;
    std::string base = root.filename().string();
    if (base.empty()) base = root.parent_path().filename().string();
    for (char& c : base) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    b.name = base;

    Matrix features = load_feature_csv((root / "features.csv").string());
    const auto n = static_cast<std::int64_t>(features.rows());
    auto edges = load_edge_list((root / "graph.txt").string());
    for (const auto& [u, v] : edges)
        if (u >= n || v >= n)
            throw IoError("graph.txt references node " + std::to_string(std::max(u, v)) +
                          " but features.csv has " + std::to_string(n) + " rows");
    b.graph = build_graph(edges, std::move(features));
    const fs::path label_path = root / "labels.csv";
    if (fs::exists(label_path)) {
        b.labels = load_labels(label_path.string(), n);
        b.has_labels = true;
    }
    return b;
}

void save_dataset(const DatasetBundle& b, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path root(dir);
    write_edge_list(b.graph, (root / "graph.txt").string());
    write_feature_csv(b.graph.features, (root / "features.csv").string());
    if (b.has_labels) write_labels(b.labels, (root / "labels.csv").string());
}

namespace {

struct DatasetDefaults {
    const char* name;
    double lr;
    std::int64_t epochs;
    std::int64_t k;
};

// Per-dataset settings; unknown datasets fall back to lr=1e-3, 100 epochs,
// threshold 6.
constexpr DatasetDefaults kDefaults[] = {
    {"cora", 5e-3, 200, 6},      {"citeseer", 3e-3, 200, 6}, {"pubmed", 4e-3, 100, 6},
    {"bitcoinotc", 4e-4, 100, 6}, {"bitotc", 5e-4, 100, 6},   {"bitalpha", 5e-3, 100, 6},
    {"reddit", 5e-4, 300, 9},     {"tolokers", 4e-2, 300, 90},
};

const DatasetDefaults* find_defaults(const std::string& name) {
    for (const auto& d : kDefaults)
        if (name == d.name) return &d;
    return nullptr;
}

template <typename T>
T get_number(const nlohmann::json& v, const char* key) {
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(std::string("config key '") + key + "' must be a boolean");
        return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() && !v.is_number_unsigned())
            throw ConfigError(std::string("config key '") + key + "' must be an integer");
        return v.get<T>();
    } else {
        if (!v.is_number()) throw ConfigError(std::string("config key '") + key + "' must be a number");
        return v.get<T>();
    }
}

std::string get_string(const nlohmann::json& v, const char* key) {
    if (!v.is_string()) throw ConfigError(std::string("config key '") + key + "' must be a string");
    return v.get<std::string>();
}

void check_choice(const std::string& value, std::initializer_list<const char*> allowed,
                  const char* key) {
    for (const char* a : allowed)
        if (value == a) return;
    throw ConfigError(std::string("config key '") + key + "' has unsupported value '" + value +
                      "'");
}

}  // namespace

RunConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a single JSON object");
    RunConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "d") c.d = get_number<std::int64_t>(value, "d");
        else if (key == "r") c.r = get_number<std::int64_t>(value, "r");
        else if (key == "w") c.w = get_number<std::int64_t>(value, "w");
        else if (key == "tau") c.tau = get_number<double>(value, "tau");
        else if (key == "alpha") c.alpha = get_number<double>(value, "alpha");
        else if (key == "k_threshold") c.k_threshold = get_number<std::int64_t>(value, "k_threshold");
        else if (key == "learning_rate") c.learning_rate = get_number<double>(value, "learning_rate");
        else if (key == "epochs") c.epochs = get_number<std::int64_t>(value, "epochs");
        else if (key == "stage_switch_epoch")
            c.stage_switch_epoch = get_number<std::int64_t>(value, "stage_switch_epoch");
        else if (key == "restart_prob") c.restart_prob = get_number<double>(value, "restart_prob");
        else if (key == "rwr_size") c.rwr_size = get_number<std::int64_t>(value, "rwr_size");
        else if (key == "seed") c.seed = get_number<std::uint64_t>(value, "seed");
        else if (key == "disable_np") c.disable_np = get_number<bool>(value, "disable_np");
        else if (key == "disable_nc") c.disable_nc = get_number<bool>(value, "disable_nc");
        else if (key == "disable_intra") c.disable_intra = get_number<bool>(value, "disable_intra");
        else if (key == "disable_inter") c.disable_inter = get_number<bool>(value, "disable_inter");
        else if (key == "gcn_layers") c.gcn_layers = get_number<std::int64_t>(value, "gcn_layers");
        else if (key == "mask_anchor") c.mask_anchor = get_number<bool>(value, "mask_anchor");
        else if (key == "normalize_infonce_rows")
            c.normalize_infonce_rows = get_number<bool>(value, "normalize_infonce_rows");
        else if (key == "score_contrast_mode")
            c.score_contrast_mode = get_string(value, "score_contrast_mode");
        else if (key == "stage2_views") c.stage2_views = get_string(value, "stage2_views");
        else if (key == "score_view") c.score_view = get_string(value, "score_view");
        else if (key == "stratify_mode") c.stratify_mode = get_string(value, "stratify_mode");
        else throw ConfigError("unknown config key '" + key + "'");
    }

    if (c.d < 1) throw ConfigError("d must be >= 1");
    if (c.r < 1) throw ConfigError("r must be >= 1");
    if (c.w < 1) throw ConfigError("w must be >= 1");
    if (!(c.tau > 0.0)) throw ConfigError("tau must be > 0");
    if (!(c.alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    if (c.k_threshold && *c.k_threshold < 1) throw ConfigError("k_threshold must be >= 1");
    if (c.learning_rate && !(*c.learning_rate > 0.0))
        throw ConfigError("learning_rate must be > 0");
    if (c.epochs && *c.epochs < 0) throw ConfigError("epochs must be >= 0");
    if (c.stage_switch_epoch && *c.stage_switch_epoch < 1)
        throw ConfigError("stage_switch_epoch must be >= 1");
    if (!(c.restart_prob >= 0.0) || !(c.restart_prob < 1.0))
        throw ConfigError("restart_prob must be in [0, 1)");
    if (c.rwr_size < 1) throw ConfigError("rwr_size must be >= 1");
    if (c.gcn_layers < 1) throw ConfigError("gcn_layers must be >= 1");
    if (c.mask_anchor && c.gcn_layers != 1)
        throw ConfigError("mask_anchor requires gcn_layers = 1");
    check_choice(c.score_contrast_mode, {"pos_neg", "pos_only"}, "score_contrast_mode");
    check_choice(c.stage2_views, {"completion_pair", "completion_plus_pruned"}, "stage2_views");
    check_choice(c.score_view, {"original", "completion_avg"}, "score_view");
    check_choice(c.stratify_mode, {"stratum", "global"}, "stratify_mode");
    return c;
}

RunConfig load_config(const std::string& path) {
    const std::string buf = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

ResolvedConfig resolve_config(const RunConfig& c, const std::string& dataset_name) {
    ResolvedConfig r;
    r.dataset = dataset_name;
    r.d = c.d;
    r.r = c.r;
    r.w = c.w;
    r.tau = c.tau;
    r.alpha = c.alpha;
    r.restart_prob = c.restart_prob;
    r.rwr_size = c.rwr_size;
    r.seed = c.seed;
    r.disable_np = c.disable_np;
    r.disable_nc = c.disable_nc;
    r.disable_intra = c.disable_intra;
    r.disable_inter = c.disable_inter;
    r.gcn_layers = c.gcn_layers;
    r.mask_anchor = c.mask_anchor;
    r.normalize_infonce_rows = c.normalize_infonce_rows;
    r.score_pos_only = c.score_contrast_mode == "pos_only";
    r.stage2_views = c.stage2_views == "completion_pair" ? Stage2Views::CompletionPair
                                                         : Stage2Views::CompletionPlusPruned;
    r.score_view = c.score_view == "original" ? ScoreView::Original : ScoreView::CompletionAvg;
    r.stratify_mode =
        c.stratify_mode == "stratum" ? StratifyMode::Stratum : StratifyMode::Global;

    const DatasetDefaults* dd = find_defaults(dataset_name);
    r.learning_rate = c.learning_rate ? *c.learning_rate : (dd ? dd->lr : 1e-3);
    r.epochs = c.epochs ? *c.epochs : (dd ? dd->epochs : 100);
    r.k_threshold = c.k_threshold ? *c.k_threshold : (dd ? dd->k : 6);

    if (r.epochs == 0) {
        r.stage_switch_epoch = 0;
        if (c.stage_switch_epoch)
            throw ConfigError("stage_switch_epoch is meaningless with epochs = 0");
    } else {
        r.stage_switch_epoch =
            c.stage_switch_epoch ? *c.stage_switch_epoch : std::max<std::int64_t>(1, r.epochs / 2);
        if (r.stage_switch_epoch < 1 || r.stage_switch_epoch > r.epochs)
            throw ConfigError("stage_switch_epoch must lie in [1, epochs]");
    }
    return r;
}

nlohmann::json to_json(const ResolvedConfig& c) {
    nlohmann::json j;
    j["dataset"] = c.dataset;
    j["d"] = c.d;
    j["r"] = c.r;
    j["w"] = c.w;
    j["tau"] = c.tau;
    j["alpha"] = c.alpha;
    j["k_threshold"] = c.k_threshold;
    j["learning_rate"] = c.learning_rate;
    j["epochs"] = c.epochs;
    j["stage_switch_epoch"] = c.stage_switch_epoch;
    j["restart_prob"] = c.restart_prob;
    j["rwr_size"] = c.rwr_size;
    j["seed"] = c.seed;
    j["disable_np"] = c.disable_np;
    j["disable_nc"] = c.disable_nc;
    j["disable_intra"] = c.disable_intra;
    j["disable_inter"] = c.disable_inter;
    j["gcn_layers"] = c.gcn_layers;
    j["mask_anchor"] = c.mask_anchor;
    j["normalize_infonce_rows"] = c.normalize_infonce_rows;
    j["score_contrast_mode"] = c.score_pos_only ? "pos_only" : "pos_neg";
    j["stage2_views"] = c.stage2_views == Stage2Views::CompletionPair ? "completion_pair"
                                                                      : "completion_plus_pruned";
    j["score_view"] = c.score_view == ScoreView::Original ? "original" : "completion_avg";
    j["stratify_mode"] = c.stratify_mode == StratifyMode::Stratum ? "stratum" : "global";
    return j;
}

}  // namespace adgcl::io
