#pragma once

#include <stdexcept>
#include <string>

namespace prooftrain {

enum class Errc {
  InapplicableTactic,
  NoOpenGoals,
  InvalidPosition,
  GenerationExhausted,
  StateNotInTree,
  StateAlreadyProved,
  ReplayMismatch,
  TacticNotApplicable,
  NoApplicableTactics,
  EmptyDataset,
  NonFiniteLoss,
  NonFiniteValue,
  ScoreOutOfRange,
  EmptyBucket,
  UnfittedRegressor,
  InvalidThreshold,
  EmptyPairs,
  MissingCheckpoint,
  InvalidConfig,
  ParseError,
  IoError,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::InapplicableTactic: return "InapplicableTactic";
    case Errc::NoOpenGoals: return "NoOpenGoals";
    case Errc::InvalidPosition: return "InvalidPosition";
    case Errc::GenerationExhausted: return "GenerationExhausted";
    case Errc::StateNotInTree: return "StateNotInTree";
    case Errc::StateAlreadyProved: return "StateAlreadyProved";
    case Errc::ReplayMismatch: return "ReplayMismatch";
    case Errc::TacticNotApplicable: return "TacticNotApplicable";
    case Errc::NoApplicableTactics: return "NoApplicableTactics";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::ScoreOutOfRange: return "ScoreOutOfRange";
    case Errc::EmptyBucket: return "EmptyBucket";
    case Errc::UnfittedRegressor: return "UnfittedRegressor";
    case Errc::InvalidThreshold: return "InvalidThreshold";
    case Errc::EmptyPairs: return "EmptyPairs";
    case Errc::MissingCheckpoint: return "MissingCheckpoint";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace prooftrain
