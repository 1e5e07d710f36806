#pragma once

#include <stdexcept>
#include <string>

namespace tutor_eval {

// Base for all harness errors; what() carries the human message,
// code() a stable machine-readable tag.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define TUTOR_EVAL_ERROR(Name)                                     \
    class Name : public Error {                                    \
    public:                                                        \
        explicit Name(const std::string& message)                  \
            : Error(#Name, message) {}                             \
    }

// corpus
TUTOR_EVAL_ERROR(EmptyTranscript);
TUTOR_EVAL_ERROR(UnresolvableSpeakers);
TUTOR_EVAL_ERROR(EmptyCorpus);
TUTOR_EVAL_ERROR(IoFailure);
TUTOR_EVAL_ERROR(MalformedRecord);

// rubric
TUTOR_EVAL_ERROR(NoObjectFound);
TUTOR_EVAL_ERROR(MissingCriterion);
TUTOR_EVAL_ERROR(InvalidValue);
TUTOR_EVAL_ERROR(InconsistentSentinel);

// judge
TUTOR_EVAL_ERROR(EmptyDialogue);
TUTOR_EVAL_ERROR(InvalidParameter);
TUTOR_EVAL_ERROR(TransportError);
TUTOR_EVAL_ERROR(CassetteMiss);

// annotation
TUTOR_EVAL_ERROR(UnknownGrader);
TUTOR_EVAL_ERROR(NoOverlap);
TUTOR_EVAL_ERROR(MalformedRow);

// metrics
TUTOR_EVAL_ERROR(LengthMismatch);
TUTOR_EVAL_ERROR(EmptyVectors);
TUTOR_EVAL_ERROR(OutOfRange);
TUTOR_EVAL_ERROR(MissingPrediction);
TUTOR_EVAL_ERROR(NoReferenceNegatives);

#undef TUTOR_EVAL_ERROR

} // namespace tutor_eval
