#include "opls/model.hpp"

#include "opls/csv.hpp"
#include "opls/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace opls {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_names(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) {
        out.push_back(cur);
    }
    return out;
}

[[noreturn]] void fail_line(std::size_t line, const std::string& msg) {
    throw InputError("model line " + std::to_string(line) + ": " + msg);
}

} // namespace

std::vector<std::size_t> PathModel::predecessors(std::size_t latent) const {
    std::vector<std::size_t> out;
    for (Eigen::Index k = 0; k < inner_.cols(); ++k) {
        if (inner_(static_cast<Eigen::Index>(latent), k) != 0.0) {
            out.push_back(static_cast<std::size_t>(k));
        }
    }
    return out;
}

std::size_t PathModel::latent_index(std::string_view name) const {
    const auto it = std::find(latent_names_.begin(), latent_names_.end(), name);
    if (it == latent_names_.end()) {
        throw InputError("unknown latent '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - latent_names_.begin());
}

std::size_t PathModel::edge_count() const {
    return static_cast<std::size_t>(inner_.sum());
}

PathModel build_model(const ModelSpec& spec) {
    if (spec.latents.empty()) {
        throw InputError("model declares no latent variables");
    }
    std::map<std::string, std::size_t> decl_index;
    for (std::size_t i = 0; i < spec.latents.size(); ++i) {
        if (spec.latents[i].name.empty()) {
            throw InputError("latent with empty name");
        }
        if (!decl_index.emplace(spec.latents[i].name, i).second) {
            throw InputError("latent '" + spec.latents[i].name + "' declared twice");
        }
    }
    const std::size_t count = spec.latents.size();

    std::vector<std::set<std::size_t>> preds(count);
    for (const auto& [from, to] : spec.paths) {
        const auto f = decl_index.find(from);
        const auto t = decl_index.find(to);
        if (f == decl_index.end()) {
            throw InputError("path refers to unknown latent '" + from + "'");
        }
        if (t == decl_index.end()) {
            throw InputError("path refers to unknown latent '" + to + "'");
        }
        if (f->second == t->second) {
            throw InputError("non-recursive model: self loop on '" + from + "'");
        }
        if (!preds[t->second].insert(f->second).second) {
            throw InputError("duplicate path " + from + " -> " + to);
        }
    }

    std::vector<bool> exogenous(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto& decl = spec.latents[i];
        const bool has_incoming = !preds[i].empty();
        if (decl.kind == LatentKind::exogenous && has_incoming) {
            throw InputError("exogenous latent '" + decl.name + "' has incoming paths");
        }
        if (decl.kind == LatentKind::endogenous && !has_incoming) {
            throw InputError("endogenous latent '" + decl.name + "' has no incoming path");
        }
        exogenous[i] = !has_incoming;
    }

    // Exogenous latents first, then endogenous ones in a stable topological order.
    std::vector<std::size_t> order;
    std::vector<bool> placed(count, false);
    for (std::size_t i = 0; i < count; ++i) {
        if (exogenous[i]) {
            order.push_back(i);
            placed[i] = true;
        }
    }
    const std::size_t n_exo = order.size();
    while (order.size() < count) {
        bool progressed = false;
        for (std::size_t i = 0; i < count; ++i) {
            if (placed[i]) {
                continue;
            }
            const bool ready = std::all_of(preds[i].begin(), preds[i].end(),
                                           [&](std::size_t p) { return placed[p]; });
            if (ready) {
                order.push_back(i);
                placed[i] = true;
                progressed = true;
                break;
            }
        }
        if (!progressed) {
            throw InputError("non-recursive model: the inner graph contains a cycle");
        }
    }

    std::map<std::string, const std::vector<std::string>*> block_of;
    for (const auto& [latent, indicators] : spec.blocks) {
        if (!decl_index.contains(latent)) {
            throw InputError("indicators declared for unknown latent '" + latent + "'");
        }
        if (!block_of.emplace(latent, &indicators).second) {
            throw InputError("indicators declared twice for latent '" + latent + "'");
        }
    }

    PathModel model;
    model.name_ = spec.name;
    model.exogenous_count_ = n_exo;
    std::vector<std::size_t> position(count);
    for (std::size_t pos = 0; pos < count; ++pos) {
        position[order[pos]] = pos;
        model.latent_names_.push_back(spec.latents[order[pos]].name);
    }

    std::set<std::string> seen_indicators;
    for (std::size_t pos = 0; pos < count; ++pos) {
        const auto& name = model.latent_names_[pos];
        const auto it = block_of.find(name);
        if (it == block_of.end() || it->second->empty()) {
            throw InputError("latent '" + name + "' has an empty block");
        }
        model.offsets_.push_back(model.indicator_names_.size());
        for (const auto& ind : *it->second) {
            if (!seen_indicators.insert(ind).second) {
                throw InputError("indicator '" + ind + "' assigned more than once");
            }
            model.indicator_names_.push_back(ind);
            model.owners_.push_back(pos);
        }
        model.blocks_.push_back(*it->second);
    }

    const auto n = static_cast<Eigen::Index>(count);
    model.inner_ = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t p : preds[i]) {
            model.inner_(static_cast<Eigen::Index>(position[i]),
                         static_cast<Eigen::Index>(position[p])) = 1.0;
        }
    }

    const auto k = static_cast<Eigen::Index>(model.indicator_names_.size());
    model.pattern_ = Eigen::MatrixXd::Zero(k, n);
    for (Eigen::Index r = 0; r < k; ++r) {
        model.pattern_(r, static_cast<Eigen::Index>(model.owners_[static_cast<std::size_t>(r)])) = 1.0;
    }
    return model;
}

PathModel parse_model(std::string_view text) {
    ModelSpec spec;
    std::map<std::string, std::size_t> known;
    auto ensure_latent = [&](const std::string& name) {
        if (!known.contains(name)) {
            known.emplace(name, spec.latents.size());
            spec.latents.push_back({name, std::nullopt});
        }
        return known[name];
    };

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                              : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto sp = line.find_first_of(" \t");
        const std::string_view keyword = line.substr(0, sp);
        const std::string_view rest = sp == std::string_view::npos ? std::string_view{}
                                                                   : trim(line.substr(sp));
        if (keyword == "model") {
            if (rest.empty()) {
                fail_line(line_no, "model name missing");
            }
            spec.name = std::string(rest);
        } else if (keyword == "latent") {
            const auto parts = split_names(rest);
            if (parts.empty() || parts.size() > 2) {
                fail_line(line_no, "expected 'latent <name> [exogenous|endogenous]'");
            }
            if (known.contains(parts[0]) && spec.latents[known[parts[0]]].kind) {
                fail_line(line_no, "latent '" + parts[0] + "' declared twice");
            }
            const auto idx = ensure_latent(parts[0]);
            if (parts.size() == 2) {
                if (parts[1] == "exogenous") {
                    spec.latents[idx].kind = LatentKind::exogenous;
                } else if (parts[1] == "endogenous") {
                    spec.latents[idx].kind = LatentKind::endogenous;
                } else {
                    fail_line(line_no, "unknown latent kind '" + parts[1] + "'");
                }
            }
        } else if (keyword == "indicators") {
            const auto colon = rest.find(':');
            if (colon == std::string_view::npos) {
                fail_line(line_no, "expected 'indicators <latent>: <names>'");
            }
            const std::string latent(trim(rest.substr(0, colon)));
            if (latent.empty()) {
                fail_line(line_no, "latent name missing");
            }
            auto names = split_names(rest.substr(colon + 1));
            if (names.empty()) {
                fail_line(line_no, "latent '" + latent + "' has an empty block");
            }
            ensure_latent(latent);
            spec.blocks.emplace_back(latent, std::move(names));
        } else if (keyword == "path") {
            const auto arrow = rest.find("->");
            if (arrow == std::string_view::npos) {
                fail_line(line_no, "expected 'path <from> -> <to>'");
            }
            const std::string from(trim(rest.substr(0, arrow)));
            const std::string to(trim(rest.substr(arrow + 2)));
            if (from.empty() || to.empty()) {
                fail_line(line_no, "path endpoint missing");
            }
            spec.paths.emplace_back(from, to);
        } else {
            fail_line(line_no, "unknown keyword '" + std::string(keyword) + "'");
        }
    }
    return build_model(spec);
}

std::string serialize_model(const PathModel& model) {
    std::ostringstream out;
    out << "model " << model.name() << '\n';
    for (std::size_t j = 0; j < model.latent_count(); ++j) {
        out << "latent " << model.latent_names()[j] << ' '
            << (j < model.exogenous_count() ? "exogenous" : "endogenous") << '\n';
    }
    for (std::size_t j = 0; j < model.latent_count(); ++j) {
        out << "indicators " << model.latent_names()[j] << ':';
        const auto& block = model.block(j);
        for (std::size_t h = 0; h < block.size(); ++h) {
            out << (h == 0 ? " " : ", ") << block[h];
        }
        out << '\n';
    }
    for (std::size_t j = 0; j < model.latent_count(); ++j) {
        for (std::size_t k : model.predecessors(j)) {
            out << "path " << model.latent_names()[k] << " -> " << model.latent_names()[j] << '\n';
        }
    }
    return out.str();
}

PathModel read_model_file(const std::filesystem::path& path) {
    return parse_model(csv::read_file(path));
}

bool DataMatrix::all_ordinal() const {
    return std::all_of(kinds.begin(), kinds.end(),
                       [](ColumnKind k) { return k == ColumnKind::ordinal; });
}

std::vector<int> DataMatrix::ordinal_column(std::size_t k) const {
    std::vector<int> out(rows());
    for (std::size_t s = 0; s < rows(); ++s) {
        out[s] = static_cast<int>(std::lround(values(static_cast<Eigen::Index>(s),
                                                     static_cast<Eigen::Index>(k))));
    }
    return out;
}

int DataMatrix::max_category(std::size_t k) const {
    return static_cast<int>(std::lround(values.col(static_cast<Eigen::Index>(k)).maxCoeff()));
}

DataMatrix make_data(Eigen::MatrixXd values, std::vector<std::string> names,
                     std::vector<ColumnKind> kinds) {
    if (static_cast<std::size_t>(values.cols()) != names.size() ||
        names.size() != kinds.size()) {
        throw InputError("data: column names and kinds do not match the matrix width");
    }
    if (values.rows() < 3) {
        throw InputError("data: at least 3 observations are required");
    }
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        for (Eigen::Index r = 0; r < values.rows(); ++r) {
            const double v = values(r, c);
            if (!std::isfinite(v)) {
                throw InputError("data: non-finite value at row " + std::to_string(r + 1) +
                                 ", column '" + names[static_cast<std::size_t>(c)] + "'");
            }
            if (kinds[static_cast<std::size_t>(c)] == ColumnKind::ordinal &&
                (v != std::round(v) || v < 1.0)) {
                throw InputError("data: ordinal column '" + names[static_cast<std::size_t>(c)] +
                                 "' has non positive-integer value at row " +
                                 std::to_string(r + 1));
            }
        }
    }
    return DataMatrix{std::move(values), std::move(names), std::move(kinds)};
}

DataMatrix load_data(std::string_view csv_text, const PathModel& model, KindHint hint) {
    const auto table = csv::parse(csv_text);
    std::map<std::string, std::size_t> column_of;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        column_of.emplace(table.header[c], c);
    }
    const auto& names = model.indicator_names();
    std::vector<std::size_t> source(names.size());
    for (std::size_t k = 0; k < names.size(); ++k) {
        const auto it = column_of.find(names[k]);
        if (it == column_of.end()) {
            throw InputError("data: missing column '" + names[k] + "'");
        }
        source[k] = it->second;
    }

    const auto n = static_cast<Eigen::Index>(table.rows.size());
    Eigen::MatrixXd values(n, static_cast<Eigen::Index>(names.size()));
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = table.rows[static_cast<std::size_t>(r)];
        const auto line = table.lines[static_cast<std::size_t>(r)];
        for (std::size_t k = 0; k < names.size(); ++k) {
            const auto& field = row[source[k]];
            if (field.empty() || field == "NA") {
                throw InputError("data: missing value at line " + std::to_string(line) +
                                 ", column '" + names[k] + "'");
            }
            double v = 0.0;
            if (!csv::parse_double(field, v)) {
                throw InputError("data: non-numeric value '" + field + "' at line " +
                                 std::to_string(line) + ", column '" + names[k] + "'");
            }
            values(r, static_cast<Eigen::Index>(k)) = v;
        }
    }

    std::vector<ColumnKind> kinds(names.size(), ColumnKind::interval);
    for (std::size_t k = 0; k < names.size(); ++k) {
        const auto col = values.col(static_cast<Eigen::Index>(k));
        const bool integral = (col.array() == col.array().round()).all() && n > 0 &&
                              col.minCoeff() >= 1.0;
        switch (hint) {
        case KindHint::infer:
            kinds[k] = integral ? ColumnKind::ordinal : ColumnKind::interval;
            break;
        case KindHint::interval:
            kinds[k] = ColumnKind::interval;
            break;
        case KindHint::ordinal:
            kinds[k] = ColumnKind::ordinal;
            break;
        }
    }
    return make_data(std::move(values), names, std::move(kinds));
}

DataMatrix read_data_file(const std::filesystem::path& path, const PathModel& model,
                          KindHint hint) {
    return load_data(csv::read_file(path), model, hint);
}

} // namespace opls
