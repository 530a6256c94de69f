#include "icbpl/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "icbpl/error.hpp"

namespace icbpl {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view value, const std::string& where) {
    T out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        fail(ErrorCode::kInvalidArgument, where + ": cannot parse '" + std::string(value) + "' as a number");
    return out;
}

std::string format_double(double v) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
    (void)ec;
    return std::string(buffer, ptr);
}

void apply(TrainConfig& config, std::string_view key, std::string_view value, const std::string& where) {
    if (key == "clusters") config.clusters = parse_number<int>(value, where);
    else if (key == "latent_dim") config.latent_dim = parse_number<int>(value, where);
    else if (key == "hidden_dims") {
        config.hidden_dims.clear();
        std::string_view rest = value;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const std::string_view item = trim(rest.substr(0, comma));
            if (!item.empty()) config.hidden_dims.push_back(parse_number<int>(item, where));
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        }
    } else if (key == "preset") config.weights = LossWeights::preset(value);
    else if (key == "lambda1") config.weights.lambda1 = parse_number<double>(value, where);
    else if (key == "lambda2") config.weights.lambda2 = parse_number<double>(value, where);
    else if (key == "lambda3") config.weights.lambda3 = parse_number<double>(value, where);
    else if (key == "sigma") {
        config.kernel = value == "median" ? KernelConfig::median() : KernelConfig::fixed(parse_number<double>(value, where));
    } else if (key == "neighbor_count") config.neighbor_count = parse_number<int>(value, where);
    else if (key == "refresh_period") config.refresh_period = parse_number<int>(value, where);
    else if (key == "batch_size") config.batch_size = parse_number<int>(value, where);
    else if (key == "max_epochs") config.max_epochs = parse_number<int>(value, where);
    else if (key == "lr") config.lr = parse_number<double>(value, where);
    else if (key == "seed") config.seed = parse_number<std::uint64_t>(value, where);
    else if (key == "metric") {
        if (value == "cosine") config.metric = Metric::kCosine;
        else if (value == "euclidean") config.metric = Metric::kEuclidean;
        else fail(ErrorCode::kInvalidArgument, where + ": metric must be cosine or euclidean");
    } else if (key == "augmentation") {
        if (value == "views") config.augmentation = AugmentationMode::kViews;
        else if (value == "noise") config.augmentation = AugmentationMode::kNoise;
        else fail(ErrorCode::kInvalidArgument, where + ": augmentation must be views or noise");
    } else if (key == "noise_std") config.noise_std = parse_number<double>(value, where);
    else if (key == "stability_patience") config.stability_patience = parse_number<int>(value, where);
    else if (key == "stability_threshold") config.stability_threshold = parse_number<double>(value, where);
    else fail(ErrorCode::kInvalidArgument, where + ": unknown key '" + std::string(key) + "'");
}

}  // namespace

TrainConfig parse_train_config(std::string_view text, TrainConfig base) {
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto newline = text.find('\n');
        std::string_view line = text.substr(0, newline);
        text = newline == std::string_view::npos ? std::string_view{} : text.substr(newline + 1);
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::string where = "config line " + std::to_string(line_no);
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail(ErrorCode::kInvalidArgument, where + ": expected 'key = value'");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        if (value.empty() && key != "hidden_dims")
            fail(ErrorCode::kInvalidArgument, where + ": missing value for '" + std::string(key) + "'");
        apply(base, key, value, where);
    }
    return base;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::kIoError, "cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_train_config(text.str());
}

std::string format_train_config(const TrainConfig& config) {
    std::ostringstream out;
    out << "clusters = " << config.clusters << '\n';
    out << "latent_dim = " << config.latent_dim << '\n';
    out << "hidden_dims = ";
    for (std::size_t i = 0; i < config.hidden_dims.size(); ++i) out << (i ? "," : "") << config.hidden_dims[i];
    out << '\n';
    out << "lambda1 = " << format_double(config.weights.lambda1) << '\n';
    out << "lambda2 = " << format_double(config.weights.lambda2) << '\n';
    out << "lambda3 = " << format_double(config.weights.lambda3) << '\n';
    out << "sigma = " << (config.kernel.is_median() ? std::string("median") : format_double(config.kernel.sigma()))
        << '\n';
    out << "neighbor_count = " << config.neighbor_count << '\n';
    out << "refresh_period = " << config.refresh_period << '\n';
    out << "batch_size = " << config.batch_size << '\n';
    out << "max_epochs = " << config.max_epochs << '\n';
    out << "lr = " << format_double(config.lr) << '\n';
    out << "seed = " << config.seed << '\n';
    out << "metric = " << (config.metric == Metric::kCosine ? "cosine" : "euclidean") << '\n';
    out << "augmentation = " << (config.augmentation == AugmentationMode::kViews ? "views" : "noise") << '\n';
    out << "noise_std = " << format_double(config.noise_std) << '\n';
    out << "stability_patience = " << config.stability_patience << '\n';
    out << "stability_threshold = " << format_double(config.stability_threshold) << '\n';
    return out.str();
}

}  // namespace icbpl
