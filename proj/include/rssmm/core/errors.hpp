#ifndef RSSMM_CORE_ERRORS_HPP
#define RSSMM_CORE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rssmm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numeric / configuration
class DomainError : public Error { public: using Error::Error; };
class InfeasibleEta : public Error { public: using Error::Error; };
class BadParams : public Error { public: using Error::Error; };

// Road graph
class EmptyNetwork : public Error { public: using Error::Error; };
class UnknownNode : public Error { public: using Error::Error; };
class EmptyCorridor : public Error { public: using Error::Error; };

// Propagation
class ZeroDistance : public Error { public: using Error::Error; };
class UnknownBs : public Error { public: using Error::Error; };
class RankDeficient : public Error { public: using Error::Error; };

// Mobility
class AllUndefined : public Error { public: using Error::Error; };
class NotAnEdge : public Error { public: using Error::Error; };
class UnassignedSlot : public Error { public: using Error::Error; };

// Decoding / optimisation
class NoFeasiblePath : public Error { public: using Error::Error; };
class InfeasibleTrajectory : public Error { public: using Error::Error; };
class InfeasiblePoint : public Error { public: using Error::Error; };
class NewtonFailure : public Error { public: using Error::Error; };

// Anchors, metrics
class EmptyFirstSlot : public Error { public: using Error::Error; };
class LengthMismatch : public Error { public: using Error::Error; };
class EmptyTruth : public Error { public: using Error::Error; };

// File layer
class IoError : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };

}  // namespace rssmm

#endif  // RSSMM_CORE_ERRORS_HPP
