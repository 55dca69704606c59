#pragma once

#include <cstddef>
#include <exception>
#include <stdexcept>
#include <string>
#include <vector>

namespace pescourse {

/// Base for every error raised by the library. Callers that only need a
/// message can catch this; the subclasses carry the machine-readable detail.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input. `offset` is a byte offset for document formats and a
/// 1-based line number for line-delimited formats (see `is_line`).
class ParseError : public Error {
  public:
    ParseError(const std::string& what, std::size_t offset, bool is_line = false)
        : Error(what), offset_(offset), is_line_(is_line) {}

    std::size_t offset() const noexcept { return offset_; }
    bool is_line() const noexcept { return is_line_; }

  private:
    std::size_t offset_;
    bool is_line_;
};

/// Well-formed input that breaks an ExamQuestion/ExamFile invariant.
/// question_no is 0 when the violation is not tied to one question.
class SchemaError : public Error {
  public:
    SchemaError(const std::string& what, int question_no)
        : Error(what), question_no_(question_no) {}
    int question_no() const noexcept { return question_no_; }

  private:
    int question_no_;
};

class DuplicateIdError : public Error {
  public:
    explicit DuplicateIdError(std::string id)
        : Error("duplicate doc_id: " + id), id_(std::move(id)) {}
    const std::string& id() const noexcept { return id_; }

  private:
    std::string id_;
};

class RerankError : public Error {
  public:
    RerankError(const std::string& what, std::string doc_id)
        : Error(what), doc_id_(std::move(doc_id)) {}
    const std::string& doc_id() const noexcept { return doc_id_; }

  private:
    std::string doc_id_;
};

class GenError : public Error {
  public:
    enum class Kind { ProviderFailure, EmptyQuery, QueryTooLong, EmptyComment };
    GenError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

  private:
    Kind kind_;
};

class CitationError : public Error {
  public:
    explicit CitationError(std::string doc_id)
        : Error("comment cites a document that was not supplied: " + doc_id),
          doc_id_(std::move(doc_id)) {}
    const std::string& doc_id() const noexcept { return doc_id_; }

  private:
    std::string doc_id_;
};

/// Pipeline failure. `stage` names where it happened ("rephrase", "search",
/// "rerank", "generate", "prompt").
class PipelineError : public Error {
  public:
    enum class Kind { DocCount, Stage };
    PipelineError(Kind kind, std::string stage, const std::string& what)
        : Error(stage + ": " + what), kind_(kind), stage_(std::move(stage)) {}
    Kind kind() const noexcept { return kind_; }
    const std::string& stage() const noexcept { return stage_; }

  private:
    Kind kind_;
    std::string stage_;
};

class ResolutionError : public Error {
  public:
    enum class Kind { SelfResolve, NotInDispute, Mismatch };
    ResolutionError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

  private:
    Kind kind_;
};

class AggregateError : public Error {
  public:
    using Error::Error;
};

class IaaError : public Error {
  public:
    using Error::Error;
};

class DomainError : public Error {
  public:
    using Error::Error;
};

class ClockError : public Error {
  public:
    using Error::Error;
};

/// Course assembly failure; `ids` lists the missing question ids or the
/// dangling doc ids.
class BuildError : public Error {
  public:
    BuildError(const std::string& what, std::vector<std::string> ids)
        : Error(what), ids_(std::move(ids)) {}
    const std::vector<std::string>& ids() const noexcept { return ids_; }

  private:
    std::vector<std::string> ids_;
};

class SessionError : public Error {
  public:
    enum class Kind { OutOfOrder, UnknownItem, BadInput };
    SessionError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

  private:
    Kind kind_;
};

/// what() of `e` followed by the what() of every nested exception, joined
/// with ": ".
inline std::string describe(const std::exception& e) {
    std::string out = e.what();
    try {
        std::rethrow_if_nested(e);
    } catch (const std::exception& inner) {
        const std::string rest = describe(inner);
        if (!out.ends_with(rest)) out += ": " + rest;
    } catch (...) {
        out += ": unknown error";
    }
    return out;
}

}  // namespace pescourse
