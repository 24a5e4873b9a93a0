#include "respire/model_io.hpp"

#include "respire/dataio.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace respire {

namespace {

constexpr std::string_view kMagic = "RESPIRE-MODEL v1";

class LineReader {
public:
    explicit LineReader(std::istream &in) : in_(in) {}

    bool next(std::string &line) {
        while (std::getline(in_, line)) {
            ++lineno_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    }
    std::string expect(std::string_view what) {
        std::string line;
        if (!next(line)) throw ParseError("unexpected end of model file, expected " + std::string(what), lineno_ + 1);
        return line;
    }
    [[nodiscard]] std::size_t line() const { return lineno_; }

private:
    std::istream &in_;
    std::size_t lineno_ = 0;
};

double to_double(std::string_view s, std::size_t line) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw ParseError("bad number '" + std::string(s) + "'", line);
    return v;
}

long long to_int(std::string_view s, std::size_t line) {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw ParseError("bad integer '" + std::string(s) + "'", line);
    return v;
}

std::vector<double> number_list(std::string_view s, std::size_t expected, std::size_t line) {
    std::vector<double> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(',', start);
        out.push_back(to_double(s.substr(start, pos == std::string_view::npos ? pos : pos - start), line));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    if (out.size() != expected)
        throw ParseError("expected " + std::to_string(expected) + " comma-separated values", line);
    return out;
}

std::string_view keyed(const std::string &line, std::string_view key, std::size_t lineno) {
    std::string_view s(line);
    if (s.size() <= key.size() || s.substr(0, key.size()) != key || s[key.size()] != ' ')
        throw ParseError("expected '" + std::string(key) + " <value>'", lineno);
    return s.substr(key.size() + 1);
}

}  // namespace

void write_model(std::ostream &out, const SemiParamModel<double> &model,
                 const std::optional<CorruptionSection> &corruption) {
    if (model.dims() != 2) throw Error("model files store exactly two independent variables");
    out << kMagic << '\n'
        << "family " << to_string(model.spec.family) << '\n'
        << "length_scale " << format_double(model.spec.length_scale) << '\n'
        << "lambda " << format_double(model.lambda) << '\n'
        << "norm_params " << format_double(model.z_norm.min) << ',' << format_double(model.z_norm.max) << '\n';
    out << "input_norm ";
    if (model.input_scaling.is_identity()) {
        out << "identity\n";
    } else {
        const auto &s = model.input_scaling;
        out << format_double(s.offset(0)) << ',' << format_double(s.scale(0)) << ',' << format_double(s.offset(1))
            << ',' << format_double(s.scale(1)) << '\n';
    }
    out << "N " << model.size() << '\n';
    for (Index i = 0; i < model.size(); ++i)
        out << format_double(model.z_train(i)) << ',' << format_double(model.weights(i, 0)) << ','
            << format_double(model.weights(i, 1)) << ',' << format_double(model.bias(i)) << '\n';
    if (corruption) {
        const VectorXd &c = corruption->values;
        if (c.size() != model.size()) throw Error("corruption vector length does not match the model");
        out << "CORRUPTION eta=" << format_double(corruption->eta) << " count=" << (c.array() != 0.0).count() << '\n';
        for (Index i = 0; i < c.size(); ++i)
            if (c(i) != 0.0) out << i << ',' << format_double(c(i)) << '\n';
    }
}

void write_model(std::ostream &out, const RobustFit<double> &fit) {
    write_model(out, fit.model, CorruptionSection{fit.eta, fit.corruption});
}

ModelFile read_model(std::istream &in) {
    LineReader r(in);
    if (r.expect("magic line") != kMagic) throw ParseError("not a model file (bad magic line)", r.line());

    ModelFile file;
    auto &m = file.model;
    const std::string fam_line = r.expect("family");
    const auto fam_name = keyed(fam_line, "family", r.line());
    const auto fam = parse_kernel_family(fam_name);
    if (!fam) throw ParseError("unknown kernel family '" + std::string(fam_name) + "'", r.line());
    const std::string ls_line = r.expect("length_scale");
    const double ls = to_double(keyed(ls_line, "length_scale", r.line()), r.line());
    if (!(ls > 0.0)) throw ParseError("length_scale must be positive", r.line());
    m.spec = KernelSpec<double>(*fam, ls);
    const std::string lambda_line = r.expect("lambda");
    m.lambda = to_double(keyed(lambda_line, "lambda", r.line()), r.line());
    if (!(m.lambda > 0.0)) throw ParseError("lambda must be positive", r.line());
    const std::string np_line = r.expect("norm_params");
    const auto np = number_list(keyed(np_line, "norm_params", r.line()), 2, r.line());
    m.z_norm = {np[0], np[1]};
    const std::string in_norm_line = r.expect("input_norm");
    const auto in_norm = keyed(in_norm_line, "input_norm", r.line());
    if (in_norm != "identity") {
        const auto v = number_list(in_norm, 4, r.line());
        m.input_scaling.offset = Eigen::Vector2d(v[0], v[2]);
        m.input_scaling.scale = Eigen::Vector2d(v[1], v[3]);
        if (!(v[1] > 0.0 && v[3] > 0.0)) throw ParseError("input scales must be positive", r.line());
    }
    const std::string n_line = r.expect("N");
    const long long n = to_int(keyed(n_line, "N", r.line()), r.line());
    if (n < 1) throw ParseError("N must be positive", r.line());

    m.z_train.resize(n);
    m.weights.resize(n, 2);
    m.bias.resize(n);
    for (Index i = 0; i < n; ++i) {
        const std::string text = r.expect("coefficient row");
        const auto row = number_list(text, 4, r.line());
        m.z_train(i) = row[0];
        m.weights(i, 0) = row[1];
        m.weights(i, 1) = row[2];
        m.bias(i) = row[3];
    }

    std::string line;
    if (r.next(line)) {
        std::string_view s(line);
        constexpr std::string_view head = "CORRUPTION eta=";
        if (s.substr(0, head.size()) != head) throw ParseError("unexpected content after coefficient rows", r.line());
        s.remove_prefix(head.size());
        const auto sp = s.find(" count=");
        if (sp == std::string_view::npos) throw ParseError("CORRUPTION header needs count=", r.line());
        CorruptionSection c;
        c.eta = to_double(s.substr(0, sp), r.line());
        const long long count = to_int(s.substr(sp + 7), r.line());
        if (count < 0 || count > n) throw ParseError("CORRUPTION count out of range", r.line());
        c.values = VectorXd::Zero(n);
        for (long long k = 0; k < count; ++k) {
            const std::string entry = r.expect("corruption entry");
            const auto comma = entry.find(',');
            if (comma == std::string::npos) throw ParseError("corruption entries are index,value", r.line());
            const long long idx = to_int(std::string_view(entry).substr(0, comma), r.line());
            if (idx < 0 || idx >= n) throw ParseError("corruption index out of range", r.line());
            c.values(idx) = to_double(std::string_view(entry).substr(comma + 1), r.line());
        }
        if (r.next(line)) throw ParseError("trailing content after CORRUPTION section", r.line());
        file.corruption = std::move(c);
    }
    return file;
}

void write_model_file(const std::string &path, const SemiParamModel<double> &model,
                      const std::optional<CorruptionSection> &corruption) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_model(out, model, corruption);
}

ModelFile read_model_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    return read_model(in);
}

}  // namespace respire
