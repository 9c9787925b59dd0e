#ifndef VFC_ERRORS_HPP
#define VFC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vfc {

// Library errors carry a stable machine-readable code (the CLI maps codes to
// exit statuses) plus a human message with chart/branch context.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

inline Error err_infeasible(const std::string& w) { return {"INFEASIBLE", w}; }
inline Error err_bad_dim(const std::string& w) { return {"BAD_DIM", w}; }
inline Error err_not_member(const std::string& w) { return {"NOT_MEMBER", w}; }
inline Error err_not_mapped(const std::string& w) { return {"NOT_MAPPED", w}; }
inline Error err_degree_overflow(const std::string& w) { return {"DEGREE_OVERFLOW", w}; }
inline Error err_degree_mismatch(const std::string& w) { return {"DEGREE_MISMATCH", w}; }
inline Error err_nonconverged(const std::string& w) { return {"NONCONVERGED", w}; }
inline Error err_rejected(const std::string& w) { return {"REJECTED", w}; }
inline Error err_not_transverse(const std::string& w) { return {"NOT_TRANSVERSE", w}; }
inline Error err_not_locally_finite(const std::string& w) { return {"NOT_LOCALLY_FINITE", w}; }
inline Error err_bad_nesting(const std::string& w) { return {"BAD_NESTING", w}; }
inline Error err_group_not_closed(const std::string& w) { return {"GROUP_NOT_CLOSED", w}; }
inline Error err_cannot_cover(const std::string& w) { return {"CANNOT_COVER", w}; }
inline Error err_cannot_scale(const std::string& w) { return {"CANNOT_SCALE", w}; }
inline Error err_not_submersion(const std::string& w) { return {"NOT_SUBMERSION", w}; }
inline Error err_not_covering(const std::string& w) { return {"NOT_COVERING", w}; }
inline Error err_axiom_violation(const std::string& w) { return {"AXIOM_VIOLATION", w}; }
inline Error err_support_escape(const std::string& w) { return {"SUPPORT_ESCAPE", w}; }
inline Error err_no_transverse_found(const std::string& w) { return {"NO_TRANSVERSE_FOUND", w}; }
inline Error err_dim_unsupported(const std::string& w) { return {"DIM_UNSUPPORTED", w}; }
inline Error err_refinement_failed(const std::string& w) { return {"REFINEMENT_FAILED", w}; }
inline Error err_cover_fail(const std::string& w) { return {"COVER_FAIL", w}; }
inline Error err_not_unitary(const std::string& w) { return {"NOT_UNITARY", w}; }
inline Error err_schema(const std::string& w) { return {"SCHEMA", w}; }
inline Error err_io(const std::string& w) { return {"IO", w}; }

}  // namespace vfc

#endif
