#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace opls {

enum class LatentKind { exogenous, endogenous };

/// Declarative description of a path model, in any declaration order.
/// build_model() validates it and fixes the latent ordering.
struct ModelSpec {
    struct Latent {
        std::string name;
        std::optional<LatentKind> kind; // inferred from the edges when absent
    };
    std::string name = "model";
    std::vector<Latent> latents;
    std::vector<std::pair<std::string, std::vector<std::string>>> blocks;
    std::vector<std::pair<std::string, std::string>> paths; // (from, to)
};

/// Validated recursive path model.
///
/// Latents are ordered exogenous first, endogenous after in a topological
/// order of the inner graph, so `inner` (t_jk = 1 when latent k points to
/// latent j) is strictly lower triangular with zero rows for the exogenous
/// latents. Manifest indicators are laid out block after block in latent order.
class PathModel {
public:
    const std::string& name() const { return name_; }
    std::size_t latent_count() const { return latent_names_.size(); }
    std::size_t exogenous_count() const { return exogenous_count_; }
    std::size_t endogenous_count() const { return latent_count() - exogenous_count_; }
    std::size_t indicator_count() const { return indicator_names_.size(); }

    const std::vector<std::string>& latent_names() const { return latent_names_; }
    const std::vector<std::string>& indicator_names() const { return indicator_names_; }
    const std::vector<std::string>& block(std::size_t latent) const { return blocks_[latent]; }
    std::size_t block_size(std::size_t latent) const { return blocks_[latent].size(); }
    std::size_t block_offset(std::size_t latent) const { return offsets_[latent]; }
    /// Latent owning manifest column `indicator`.
    std::size_t owner(std::size_t indicator) const { return owners_[indicator]; }

    const Eigen::MatrixXd& inner() const { return inner_; }
    /// Indicator (0/1) pattern of the weight matrix, K x (n+m).
    const Eigen::MatrixXd& weight_pattern() const { return pattern_; }

    /// Latents with a direct path into `latent`, ascending.
    std::vector<std::size_t> predecessors(std::size_t latent) const;
    std::size_t latent_index(std::string_view name) const;
    std::size_t edge_count() const;

    friend PathModel build_model(const ModelSpec& spec);

private:
    std::string name_;
    std::vector<std::string> latent_names_;
    std::size_t exogenous_count_ = 0;
    std::vector<std::vector<std::string>> blocks_;
    std::vector<std::string> indicator_names_;
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> owners_;
    Eigen::MatrixXd inner_;
    Eigen::MatrixXd pattern_;
};

/// Throws InputError for cycles ("non-recursive model"), unknown latents,
/// empty or missing blocks, duplicated names, and exogenous latents with
/// incoming paths.
PathModel build_model(const ModelSpec& spec);

/// Line-oriented model description:
///
///     model <name>
///     latent <name> [exogenous|endogenous]
///     indicators <latent>: <ind1>, <ind2>, ...
///     path <from> -> <to>
///
/// `#` starts a comment. Latents may also be introduced implicitly by an
/// `indicators` line.
PathModel parse_model(std::string_view text);
std::string serialize_model(const PathModel& model);
PathModel read_model_file(const std::filesystem::path& path);

enum class ColumnKind { interval, ordinal };
enum class KindHint { infer, interval, ordinal };

/// N x K observations, columns in model block order.
struct DataMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> names;
    std::vector<ColumnKind> kinds;

    std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
    bool all_ordinal() const;
    std::vector<int> ordinal_column(std::size_t k) const;
    int max_category(std::size_t k) const;
};

/// Validates shape, kinds and codes (positive integers for ordinal columns,
/// at least three rows). Throws InputError.
DataMatrix make_data(Eigen::MatrixXd values, std::vector<std::string> names,
                     std::vector<ColumnKind> kinds);

/// Parses a CSV with a header row naming every model indicator (any order,
/// extra columns ignored) and reorders the columns into block order. With
/// KindHint::infer a column is ordinal when all its values are positive
/// integers.
DataMatrix load_data(std::string_view csv_text, const PathModel& model,
                     KindHint hint = KindHint::infer);
DataMatrix read_data_file(const std::filesystem::path& path, const PathModel& model,
                          KindHint hint = KindHint::infer);

} // namespace opls
