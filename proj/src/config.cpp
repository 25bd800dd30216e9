#include "tsa/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <set>

namespace tsa {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = value.find(',', start);
        out.push_back(trim(std::string_view(value).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (std::any_of(out.begin(), out.end(), [](const std::string& s) { return s.empty(); })) {
        throw ConfigError("empty element in list '" + value + "'");
    }
    return out;
}

template <class T>
T parse_number(const std::string& text, const std::string& what) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) throw ConfigError(what + ": '" + text + "' is not a valid number");
    return value;
}

const std::map<std::string, std::set<std::string>>& allowed_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"", {"seed", "threads"}},
        {"data", {"input", "step_months", "origin", "test_fraction"}},
        {"transform", {"chain"}},
        {"model",
         {"family", "p", "d", "q", "P", "D", "Q", "m", "intercept", "max_p", "max_q", "max_P", "max_Q", "kernel",
          "gamma", "degree", "coef0", "lambda", "C", "epsilon", "tol", "window", "time_feature", "search", "hidden",
          "epochs", "batch_size", "learning_rate", "activation", "initializer", "init_a", "init_b", "stateful",
          "predict_mode"}},
        {"cv", {"n_splits", "gap"}},
        {"metrics", {"group_size"}},
    };
    return keys;
}

}  // namespace

IniDocument IniDocument::parse(std::istream& in) {
    IniDocument doc;
    std::string section;
    doc.data_[section];
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto text = trim(line);
        if (text.empty() || text.front() == '#' || text.front() == ';') continue;
        const auto where = "line " + std::to_string(number);
        if (text.front() == '[') {
            if (text.back() != ']') throw ConfigError(where + ": unterminated section header");
            section = trim(std::string_view(text).substr(1, text.size() - 2));
            if (section.empty()) throw ConfigError(where + ": empty section name");
            doc.data_[section];
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const auto key = trim(std::string_view(text).substr(0, eq));
        auto value = trim(std::string_view(text).substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": missing key");
        if (!doc.data_[section].emplace(key, std::move(value)).second) {
            throw ConfigError(where + ": duplicate key '" + key + "'");
        }
    }
    return doc;
}

IniDocument IniDocument::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse(in);
}

bool IniDocument::has(const std::string& section, const std::string& key) const {
    const auto it = data_.find(section);
    return it != data_.end() && it->second.count(key) > 0;
}

std::optional<std::string> IniDocument::get(const std::string& section, const std::string& key) const {
    const auto it = data_.find(section);
    if (it == data_.end()) return std::nullopt;
    const auto kv = it->second.find(key);
    if (kv == it->second.end()) return std::nullopt;
    return kv->second;
}

std::string to_string(ModelFamily family) {
    switch (family) {
        case ModelFamily::arima: return "arima";
        case ModelFamily::auto_arima: return "auto_arima";
        case ModelFamily::krr: return "krr";
        case ModelFamily::svr: return "svr";
        case ModelFamily::rnn: return "rnn";
        case ModelFamily::lstm: return "lstm";
        case ModelFamily::bilstm: return "bilstm";
        case ModelFamily::gru: return "gru";
    }
    return "arima";
}

ModelFamily model_family_from_string(const std::string& name) {
    for (auto f : {ModelFamily::arima, ModelFamily::auto_arima, ModelFamily::krr, ModelFamily::svr, ModelFamily::rnn,
                   ModelFamily::lstm, ModelFamily::bilstm, ModelFamily::gru}) {
        if (to_string(f) == name) return f;
    }
    throw ConfigError("unknown model family '" + name + "'");
}

void PipelineConfig::validate() const {
    if (step_months < 1) throw ConfigError("data.step_months must be >= 1");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("data.test_fraction must lie in (0, 1)");
    int arcsin = 0;
    int log = 0;
    for (const auto& t : transforms) {
        arcsin += t.kind == TransformKind::arcsin_minmax;
        log += t.kind == TransformKind::log;
        const bool differencing = t.kind == TransformKind::difference || t.kind == TransformKind::seasonal_difference;
        if (differencing && (family == ModelFamily::arima || family == ModelFamily::auto_arima)) {
            throw ConfigError("transform chain differencing conflicts with the ARIMA family; set d and D in [model]");
        }
        if (t.kind == TransformKind::difference && (t.param < 1 || t.param != static_cast<int>(t.param))) {
            throw ConfigError("diff order must be a positive integer");
        }
        if (t.kind == TransformKind::seasonal_difference && (t.param < 2 || t.param != static_cast<int>(t.param))) {
            throw ConfigError("sdiff lag must be an integer >= 2");
        }
    }
    if (arcsin > 1) throw ConfigError("transform chain may contain at most one arcsin");
    if (log > 1) throw ConfigError("transform chain may contain at most one log");
    for (const auto& s : smoothing) {
        if (s.kind == TransformKind::moving_average && (s.param < 1 || s.param != static_cast<int>(s.param))) {
            throw ConfigError("ma window must be a positive integer");
        }
        if (s.kind == TransformKind::ewma && !(s.param > 0.0 && s.param <= 1.0)) {
            throw ConfigError("ewma alpha must lie in (0, 1]");
        }
    }
    if (cv && (cv->n_splits < 1 || cv->gap < 0)) throw ConfigError("cv.n_splits must be >= 1 and cv.gap >= 0");
    if (group_size && *group_size < 1) throw ConfigError("metrics.group_size must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
}

PipelineConfig parse_pipeline_config(const IniDocument& doc) {
    const auto& allowed = allowed_keys();
    for (const auto& [section, entries] : doc.sections()) {
        const auto it = allowed.find(section);
        if (it == allowed.end()) throw ConfigError("unknown config section [" + section + "]");
        for (const auto& [key, value] : entries) {
            if (!it->second.count(key)) {
                throw ConfigError("unknown key '" + key + "' in section [" + (section.empty() ? "top" : section) + "]");
            }
        }
    }

    PipelineConfig cfg;
    if (auto v = doc.get("", "seed")) cfg.seed = parse_number<std::uint64_t>(*v, "seed");
    if (auto v = doc.get("", "threads")) cfg.threads = parse_number<unsigned>(*v, "threads");
    if (auto v = doc.get("data", "input")) cfg.input = *v;
    if (auto v = doc.get("data", "step_months")) cfg.step_months = parse_number<int>(*v, "data.step_months");
    if (auto v = doc.get("data", "origin")) {
        try {
            cfg.origin = parse_iso(*v);
        } catch (const InputError& ex) {
            throw ConfigError(std::string("data.origin: ") + ex.what());
        }
    }
    if (auto v = doc.get("data", "test_fraction")) cfg.test_fraction = parse_number<double>(*v, "data.test_fraction");

    if (auto v = doc.get("transform", "chain"); v && !v->empty() && *v != "none") {
        bool invertible_seen = false;
        for (const auto& item : split_list(*v)) {
            const auto colon = item.find(':');
            const auto name = trim(std::string_view(item).substr(0, colon));
            TransformKind kind;
            try {
                kind = transform_kind_from_string(name);
            } catch (const std::invalid_argument& ex) {
                throw ConfigError(ex.what());
            }
            double param = 0.0;
            if (colon != std::string::npos) {
                param = parse_number<double>(trim(std::string_view(item).substr(colon + 1)), "transform " + name);
            }
            if (kind == TransformKind::moving_average || kind == TransformKind::ewma) {
                if (invertible_seen) throw ConfigError("smoothing (ma, ewma) must precede invertible transforms");
                if (colon == std::string::npos) throw ConfigError(name + " needs a parameter, e.g. " + name + ":3");
                cfg.smoothing.push_back({kind, param});
                continue;
            }
            invertible_seen = true;
            if (colon == std::string::npos) {
                if (kind == TransformKind::difference) param = 1;
                if (kind == TransformKind::seasonal_difference) throw ConfigError("sdiff needs a lag, e.g. sdiff:12");
                if (kind == TransformKind::arcsin_minmax) param = 1e-3;
            }
            cfg.transforms.push_back({kind, param});
        }
    }

    const auto family = doc.get("model", "family");
    if (!family) throw ConfigError("[model] family is required");
    cfg.family = model_family_from_string(*family);
    if (const auto it = doc.sections().find("model"); it != doc.sections().end()) {
        for (const auto& [key, value] : it->second) {
            if (key != "family") cfg.model[key] = split_list(value);
        }
    }

    if (doc.sections().count("cv")) {
        CvSpec cv;
        if (auto v = doc.get("cv", "n_splits")) cv.n_splits = parse_number<int>(*v, "cv.n_splits");
        if (auto v = doc.get("cv", "gap")) cv.gap = parse_number<int>(*v, "cv.gap");
        cfg.cv = cv;
    }
    if (auto v = doc.get("metrics", "group_size")) cfg.group_size = parse_number<int>(*v, "metrics.group_size");
    cfg.validate();
    return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    auto cfg = parse_pipeline_config(IniDocument::load(path));
    if (cfg.input && cfg.input->is_relative()) cfg.input = path.parent_path() / *cfg.input;
    return cfg;
}

}  // namespace tsa
