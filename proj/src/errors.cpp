#include "mkv/errors.hpp"

namespace mkv {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::shape: return "shape";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::normalization: return "normalization";
    case ErrorKind::model_evaluation: return "model_evaluation";
    case ErrorKind::ellipticity_violation: return "ellipticity_violation";
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::nonconvergence: return "nonconvergence";
    case ErrorKind::precision: return "precision";
    case ErrorKind::inconsistency: return "inconsistency";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::unsupported_model: return "unsupported_model";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::nonstationarity: return "nonstationarity";
    case ErrorKind::degenerate_fit: return "degenerate_fit";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace mkv
