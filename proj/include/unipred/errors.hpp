#pragma once

#include <stdexcept>
#include <string>

namespace unipred {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define UNIPRED_ERROR(Name)              \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  };

UNIPRED_ERROR(DomainError)
UNIPRED_ERROR(ConditioningOnNull)
UNIPRED_ERROR(BudgetExceeded)
UNIPRED_ERROR(NotAMeasure)
UNIPRED_ERROR(MissingTrueEnv)
UNIPRED_ERROR(InvalidPopulation)
UNIPRED_ERROR(HaldaneUndefined)
UNIPRED_ERROR(NonMonotone)
UNIPRED_ERROR(EmptyActionSet)
UNIPRED_ERROR(CacheCorrupt)
UNIPRED_ERROR(UnknownExperiment)
UNIPRED_ERROR(ConfigInvalid)
UNIPRED_ERROR(IoError)

#undef UNIPRED_ERROR

}  // namespace unipred
