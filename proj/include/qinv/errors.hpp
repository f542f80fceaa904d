// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace qinv {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define QINV_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                   \
    public:                                                       \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

QINV_DEFINE_ERROR(InvalidSystem);
QINV_DEFINE_ERROR(RankDeficientOutputMap);
QINV_DEFINE_ERROR(SingularDynamics);
QINV_DEFINE_ERROR(IndexOutOfRange);
QINV_DEFINE_ERROR(MarginalSpectrum);
QINV_DEFINE_ERROR(UnboundedTrap);
QINV_DEFINE_ERROR(NotContractive);
QINV_DEFINE_ERROR(NoFixpointAtResolution);
QINV_DEFINE_ERROR(DimensionMismatch);
QINV_DEFINE_ERROR(BudgetExceeded);
QINV_DEFINE_ERROR(NotSeparated);
QINV_DEFINE_ERROR(KMaxExceeded);
QINV_DEFINE_ERROR(RepeatedExponent);
QINV_DEFINE_ERROR(NotSquareFree);
QINV_DEFINE_ERROR(ParseError);

#undef QINV_DEFINE_ERROR

}  // namespace qinv
