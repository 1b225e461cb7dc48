#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ca3d {

enum class Errc {
  malformed_sgml,
  encoding_error,
  missing_label,
  empty_corpus,
  out_of_range,
  text_too_short,
  empty_matrix,
  unlabeled_document,
  dimension_mismatch,
  invalid_order,
  zero_vector,
  grid_full,
  empty_overlap,
  empty_cluster,
  empty_class,
  degenerate_matrix,
  invalid_argument,
  io_error,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::malformed_sgml: return "MalformedSgml";
    case Errc::encoding_error: return "EncodingError";
    case Errc::missing_label: return "MissingLabel";
    case Errc::empty_corpus: return "EmptyCorpus";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::text_too_short: return "TextTooShort";
    case Errc::empty_matrix: return "EmptyMatrix";
    case Errc::unlabeled_document: return "UnlabeledDocument";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::invalid_order: return "InvalidOrder";
    case Errc::zero_vector: return "ZeroVector";
    case Errc::grid_full: return "GridFull";
    case Errc::empty_overlap: return "EmptyOverlap";
    case Errc::empty_cluster: return "EmptyCluster";
    case Errc::empty_class: return "EmptyClass";
    case Errc::degenerate_matrix: return "DegenerateMatrix";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a code and the module it
/// originated in, so the CLI and the service can report provenance.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string module, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + " [" + module +
                           "]: " + what),
        code_(code),
        module_(std::move(module)) {}

  Errc code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }

 private:
  Errc code_;
  std::string module_;
};

}  // namespace ca3d
