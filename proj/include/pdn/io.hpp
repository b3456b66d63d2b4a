#pragma once

// File formats: dataset text files, JSON model checkpoints, and versioned
// CSV outputs.

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pdn/models.hpp"
#include "pdn/synthgen.hpp"
#include "pdn/trainer.hpp"

namespace pdn {

/// Shortest decimal string that parses back to the identical double.
std::string format_double(double v);
/// Strict parse of a whole string; throws std::invalid_argument.
double parse_double(std::string_view s);

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dataset file ---------------------------------------------------------------
//
//   pdn-dataset 1
//   nodes <N>
//   classes <C>
//   node_features <F>
//   edge_features <D>
//   edges <E>
//   config <key> <value>            (zero or more, informational)
//   labels
//   <label>                         (N lines)
//   node_features
//   <x_1> ... <x_F>                 (N lines)
//   edges
//   <u> <v> <intra|inter> <f_1> ... <f_D>   (E lines, u < v)
//
// Tokens are separated by single spaces; floats use shortest round-trip form.

void write_dataset(std::ostream& out, const SyntheticDataset& ds);
void save_dataset(const std::filesystem::path& path, const SyntheticDataset& ds);
/// Throws FormatError with the offending line number.
SyntheticDataset read_dataset(std::istream& in);
SyntheticDataset load_dataset(const std::filesystem::path& path);

// Checkpoint -----------------------------------------------------------------
//
// JSON object: {"format": "pdn-checkpoint", "version": 1, "model": {spec},
// "dims": {...}, "parameters": [{"name", "rows", "cols", "values"}...]}.

std::string checkpoint_json(Model& model);
void save_checkpoint(const std::filesystem::path& path, Model& model);
std::unique_ptr<Model> load_checkpoint_json(std::string_view text);
std::unique_ptr<Model> load_checkpoint(const std::filesystem::path& path);

// CSV -------------------------------------------------------------------------

/// Writes "# pdn-<schema> v<version>", then the header row; every later row
/// must have exactly the header's column count.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, std::string_view schema, int version, std::vector<std::string> columns);

    void row(const std::vector<std::string>& cells);
    /// Column-count-checked row for a stream whose header was already written.
    static void row_to(std::ostream& out, Index expected, const std::vector<std::string>& cells);
    Index columns() const noexcept { return columns_.size(); }

private:
    std::ostream* out_;
    std::vector<std::string> columns_;
};

inline constexpr int kHistorySchemaVersion = 1;
inline constexpr int kScenarioSchemaVersion = 1;
inline constexpr int kRuntimeSchemaVersion = 1;
inline constexpr int kAttentionSchemaVersion = 1;

/// epoch,loss,train_acc,test_acc[,attention_1..attention_k]
void write_history_csv(std::ostream& out, const History& history);

/// Opens for writing (creating parent directories); throws std::runtime_error.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace pdn
