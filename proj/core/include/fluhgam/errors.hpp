#pragma once

#include <stdexcept>
#include <string>

namespace fluhgam {

// Input/validation problems map to process exit code 1, model-side
// failures to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

#define FLUHGAM_VALIDATION_ERROR(NAME)                                        \
    class NAME : public ValidationError {                                      \
    public:                                                                    \
        explicit NAME(const std::string& msg) : ValidationError(msg) {}        \
    }

#define FLUHGAM_MODEL_ERROR(NAME)                                              \
    class NAME : public ModelError {                                           \
    public:                                                                    \
        explicit NAME(const std::string& msg) : ModelError(msg) {}             \
    }

// core_data
FLUHGAM_VALIDATION_ERROR(DisconnectedGraph);
FLUHGAM_VALIDATION_ERROR(UnknownUnit);
FLUHGAM_VALIDATION_ERROR(CoincidentCentroids);
FLUHGAM_VALIDATION_ERROR(EmptyPanel);
FLUHGAM_VALIDATION_ERROR(NonIntegerCount);
FLUHGAM_VALIDATION_ERROR(NegativeCount);
FLUHGAM_VALIDATION_ERROR(GappyUnit);
FLUHGAM_VALIDATION_ERROR(SchemaError);
FLUHGAM_VALIDATION_ERROR(ReferentialError);

// spline_basis
FLUHGAM_VALIDATION_ERROR(DimensionTooSmall);
FLUHGAM_VALIDATION_ERROR(InsufficientPoints);
FLUHGAM_VALIDATION_ERROR(DegeneratePoints);
FLUHGAM_VALIDATION_ERROR(OutOfRange);

// gam_engine / forecaster
FLUHGAM_MODEL_ERROR(SingularSystem);
FLUHGAM_MODEL_ERROR(NotConverged);
FLUHGAM_MODEL_ERROR(MisalignedSamples);

// arima_baseline
FLUHGAM_VALIDATION_ERROR(NegativeInput);
FLUHGAM_VALIDATION_ERROR(SeriesTooShort);
FLUHGAM_MODEL_ERROR(NonStationaryEstimate);
FLUHGAM_MODEL_ERROR(OptimFailure);
FLUHGAM_MODEL_ERROR(AllCandidatesFailed);

// scoring
FLUHGAM_VALIDATION_ERROR(InvertedInterval);
FLUHGAM_VALIDATION_ERROR(LengthMismatch);

#undef FLUHGAM_VALIDATION_ERROR
#undef FLUHGAM_MODEL_ERROR

} // namespace fluhgam
