#include "cdg/config.hpp"

#include "cdg/analysis.hpp"
#include "cdg/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cdg {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: " + key + " expects a number, got '" + value + "'");
    }
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc{} || ptr != end)
        throw std::invalid_argument("config: " + key + " expects a nonnegative integer, got '" + value + "'");
    return v;
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw std::invalid_argument("config: " + key + " expects true/false, got '" + value + "'");
}

std::string_view task_name(Task t) {
    switch (t) {
        case Task::mnist: return "mnist";
        case Task::fashion_mnist: return "fashion_mnist";
        case Task::synthetic: return "synthetic";
    }
    return "?";
}

}  // namespace

std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(to_real("list", item));
    return out;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& raw) {
    const std::string value = trim(raw);
    if (key == "task") {
        if (value == "mnist") cfg.task = Task::mnist;
        else if (value == "fashion_mnist") cfg.task = Task::fashion_mnist;
        else if (value == "synthetic") cfg.task = Task::synthetic;
        else throw std::invalid_argument("config: unknown task '" + value + "'");
    } else if (key == "data_dir") cfg.data_dir = value;
    else if (key == "train_images") cfg.train_images = value;
    else if (key == "train_labels") cfg.train_labels = value;
    else if (key == "test_images") cfg.test_images = value;
    else if (key == "test_labels") cfg.test_labels = value;
    else if (key == "train_n") cfg.train_n = to_uint(key, value);
    else if (key == "test_n") cfg.test_n = to_uint(key, value);
    else if (key == "split_seed") cfg.split_seed = to_uint(key, value);
    else if (key == "optimizer") {
        if (value == "sgd") cfg.optimizer = OptimizerKind::sgd;
        else if (value == "adam") cfg.optimizer = OptimizerKind::adam;
        else throw std::invalid_argument("config: unknown optimizer '" + value + "'");
    } else if (key == "lr") cfg.sgd.lr = cfg.adam.lr = to_real(key, value);
    else if (key == "momentum") cfg.sgd.momentum = to_real(key, value);
    else if (key == "weight_decay") cfg.sgd.weight_decay = cfg.adam.weight_decay = to_real(key, value);
    else if (key == "beta1") cfg.adam.beta1 = to_real(key, value);
    else if (key == "beta2") cfg.adam.beta2 = to_real(key, value);
    else if (key == "eps") cfg.adam.eps = to_real(key, value);
    else if (key == "metric") cfg.precond.metric = parse_metric(value);
    else if (key == "lambda") cfg.lambda = to_real(key, value);
    else if (key == "beta") cfg.precond.blend_beta = to_real(key, value);
    else if (key == "axis") cfg.precond.axis = parse_axis(value);
    else if (key == "rasterize") cfg.precond.rasterize = to_bool(key, value);
    else if (key == "sigma") cfg.precond.sigma = to_real(key, value);
    else if (key == "layers") {
        if (value == "conv") cfg.layers = LayerScope::conv;
        else if (value == "all") cfg.layers = LayerScope::all;
        else throw std::invalid_argument("config: layers must be conv or all");
    } else if (key == "epochs") cfg.epochs = to_uint(key, value);
    else if (key == "batch_size") cfg.batch_size = to_uint(key, value);
    else if (key == "lr_period") cfg.lr_period = to_uint(key, value);
    else if (key == "eval_every") cfg.eval_every = to_uint(key, value);
    else if (key == "seeds" || key == "seed") {
        cfg.seeds.clear();
        for (const auto& s : split_list(value)) cfg.seeds.push_back(to_uint(key, s));
    } else if (key == "corr_max_d") cfg.corr_max_d = to_uint(key, value);
    else if (key == "precision") {
        if (value == "float" || value == "single") cfg.precision = Precision::single;
        else if (value == "double") cfg.precision = Precision::double_;
        else throw std::invalid_argument("config: precision must be float or double");
    } else if (key == "synthetic_dims") {
        const auto parts = split_list(value);
        if (parts.size() != 4) throw std::invalid_argument("config: synthetic_dims needs four values");
        for (std::size_t k = 0; k < 4; ++k) cfg.synthetic_dims[k] = to_uint(key, parts[k]);
    } else if (key == "synthetic_steps") cfg.synthetic_steps = to_uint(key, value);
    else if (key == "lambdas") cfg.lambdas = parse_real_list(value);
    else if (key == "sweep_metrics") {
        cfg.sweep_metrics.clear();
        for (const auto& m : split_list(value)) cfg.sweep_metrics.push_back(parse_metric(m));
    } else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "save_params") cfg.save_params = to_bool(key, value);
    else if (key == "jobs") cfg.jobs = to_uint(key, value);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        apply_setting(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config " + path.string());
    return parse_config(is);
}

void RunConfig::validate() const {
    if (seeds.empty()) throw std::invalid_argument("config: seeds must be nonempty");
    if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("config: lambda must be >= 0");
    if (eval_every < 1) throw std::invalid_argument("config: eval_every must be >= 1");
    if (task == Task::synthetic && synthetic_steps < 1)
        throw std::invalid_argument("config: synthetic_steps must be >= 1");
    if (task == Task::synthetic) (void)Tensor4(synthetic_dims);
    for (double l : lambdas)
        if (!(l >= 0.0) || !std::isfinite(l)) throw std::invalid_argument("config: lambdas must be >= 0");
    effective_precond().validate();
    if (optimizer == OptimizerKind::sgd) sgd.validate();
    else adam.validate();
}

PrecondConfig RunConfig::effective_precond() const {
    PrecondConfig p = precond;
    if (lambda == 0.0) p.metric = Metric::identity;
    else p.lambda = lambda;
    return p;
}

std::string RunConfig::label() const {
    const PrecondConfig p = effective_precond();
    std::string s(to_string(p.metric));
    if (p.metric == Metric::identity) return s;
    if (p.axis == Axis::input) s += "@input";
    if (p.rasterize && p.metric != Metric::laplacian_rasterized) s += "+raster";
    return s;
}

std::map<std::string, std::string> RunConfig::echo() const {
    std::map<std::string, std::string> e;
    e["task"] = task_name(task);
    e["train_n"] = std::to_string(train_n);
    e["test_n"] = std::to_string(test_n);
    e["split_seed"] = std::to_string(split_seed);
    e["optimizer"] = optimizer == OptimizerKind::sgd ? "sgd" : "adam";
    if (optimizer == OptimizerKind::sgd) {
        e["lr"] = format_real(sgd.lr);
        e["momentum"] = format_real(sgd.momentum);
        e["weight_decay"] = format_real(sgd.weight_decay);
    } else {
        e["lr"] = format_real(adam.lr);
        e["beta1"] = format_real(adam.beta1);
        e["beta2"] = format_real(adam.beta2);
        e["eps"] = format_real(adam.eps);
        e["weight_decay"] = format_real(adam.weight_decay);
    }
    const PrecondConfig p = effective_precond();
    e["metric"] = to_string(p.metric);
    e["lambda"] = format_real(lambda);
    e["beta"] = format_real(p.blend_beta);
    e["axis"] = to_string(p.axis);
    e["rasterize"] = p.rasterize ? "true" : "false";
    e["sigma"] = format_real(p.sigma);
    e["layers"] = layers == LayerScope::conv ? "conv" : "all";
    e["epochs"] = std::to_string(epochs);
    e["batch_size"] = std::to_string(batch_size);
    e["lr_period"] = std::to_string(lr_period);
    e["eval_every"] = std::to_string(eval_every);
    e["precision"] = precision == Precision::single ? "float" : "double";
    if (task == Task::synthetic) {
        e["synthetic_dims"] = to_string(synthetic_dims);
        e["synthetic_steps"] = std::to_string(synthetic_steps);
    }
    return e;
}

}  // namespace cdg
