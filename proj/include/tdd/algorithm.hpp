#pragma once

#include "tdd/errors.hpp"
#include "tdd/spectral_model.hpp"

#include <array>
#include <cctype>
#include <string>
#include <string_view>

namespace tdd {

/// The six two-subdomain time decompositions. Category I iterates on the
/// pair (state, adjoint), II on the state only, III on the adjoint only.
enum class AlgorithmId { DN1, ND1, DN2, ND2, DN3, ND3 };

inline constexpr std::array<AlgorithmId, 6> kAllAlgorithms = {
    AlgorithmId::DN1, AlgorithmId::ND1, AlgorithmId::DN2, AlgorithmId::ND2, AlgorithmId::DN3, AlgorithmId::ND3};

enum class Category { I, II, III };

constexpr Category category(AlgorithmId id) {
    switch (id) {
        case AlgorithmId::DN1:
        case AlgorithmId::ND1: return Category::I;
        case AlgorithmId::DN2:
        case AlgorithmId::ND2: return Category::II;
        case AlgorithmId::DN3:
        case AlgorithmId::ND3: return Category::III;
    }
    return Category::I;
}

constexpr std::string_view name(AlgorithmId id) {
    switch (id) {
        case AlgorithmId::DN1: return "DN1";
        case AlgorithmId::ND1: return "ND1";
        case AlgorithmId::DN2: return "DN2";
        case AlgorithmId::ND2: return "ND2";
        case AlgorithmId::DN3: return "DN3";
        case AlgorithmId::ND3: return "ND3";
    }
    return "?";
}

inline AlgorithmId parse_algorithm(std::string_view text) {
    std::string upper;
    for (char c : text) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    for (AlgorithmId id : kAllAlgorithms) {
        if (name(id) == upper) return id;
    }
    throw Error(ErrorKind::invalid_input, "unknown algorithm '" + std::string(text) + "'");
}

/// Interface quantities. Derivatives are never differenced; they are
/// expressed through the optimality ODEs:
///   state_rate   = y'      = lambda/nu - A y
///   adjoint_rate = lambda' = y + A lambda - yhat
enum class InterfaceQuantity { state, state_rate, adjoint, adjoint_rate };

constexpr std::string_view name(InterfaceQuantity q) {
    switch (q) {
        case InterfaceQuantity::state: return "y";
        case InterfaceQuantity::state_rate: return "y'";
        case InterfaceQuantity::adjoint: return "lambda";
        case InterfaceQuantity::adjoint_rate: return "lambda'";
    }
    return "?";
}

/// How one sweep of an algorithm runs: `first_side` is solved with
/// first_quantity = f imposed at the interface; the other side then receives
/// second_quantity copied from the first side's solution; the relaxed update
/// reads first_quantity off the second side.
struct TransmissionPlan {
    int first_side;
    InterfaceQuantity first_quantity;
    InterfaceQuantity second_quantity;
    /// Scalar unknown used for the modal analysis of this algorithm.
    ModalState analysis_state;
};

constexpr TransmissionPlan transmission_plan(AlgorithmId id) {
    using Q = InterfaceQuantity;
    switch (id) {
        case AlgorithmId::DN1: return {1, Q::adjoint, Q::state_rate, ModalState::z};
        case AlgorithmId::ND1: return {2, Q::state, Q::adjoint_rate, ModalState::mu};
        case AlgorithmId::DN2: return {1, Q::state, Q::state_rate, ModalState::z};
        case AlgorithmId::ND2: return {1, Q::state_rate, Q::state, ModalState::z};
        case AlgorithmId::DN3: return {1, Q::adjoint, Q::adjoint_rate, ModalState::mu};
        case AlgorithmId::ND3: return {1, Q::adjoint_rate, Q::adjoint, ModalState::mu};
    }
    return {1, Q::state, Q::state, ModalState::z};
}

/// Which condition side `side` of algorithm `id` imposes at the interface.
constexpr InterfaceQuantity interface_quantity(AlgorithmId id, int side) {
    const TransmissionPlan plan = transmission_plan(id);
    return side == plan.first_side ? plan.first_quantity : plan.second_quantity;
}

/// Human-readable transmission summary, including the Robin reading of the
/// derivative conditions once transferred through the optimality ODEs.
inline std::string describe(AlgorithmId id) {
    switch (id) {
        case AlgorithmId::DN1:
            return "DN1: side1 lambda(alpha)=f; side2 y'(alpha) matched, i.e. lambda/nu - A y (Robin); update lambda_2(alpha)";
        case AlgorithmId::ND1:
            return "ND1: side2 y(alpha)=f; side1 lambda'(alpha) matched, i.e. y + A lambda (Robin); update y_1(alpha)";
        case AlgorithmId::DN2:
            return "DN2: side1 y(alpha)=f; side2 y'(alpha) matched, i.e. lambda/nu - A y (Robin); update y_2(alpha)";
        case AlgorithmId::ND2:
            return "ND2: side1 y'(alpha)=f, i.e. lambda/nu - A y (Robin); side2 y(alpha) matched; update y'_2(alpha)";
        case AlgorithmId::DN3:
            return "DN3: side1 lambda(alpha)=f; side2 lambda'(alpha) matched, i.e. y + A lambda (Robin); update lambda_2(alpha)";
        case AlgorithmId::ND3:
            return "ND3: side1 lambda'(alpha)=f, i.e. y + A lambda (Robin); side2 lambda(alpha) matched; update lambda'_2(alpha)";
    }
    return {};
}

}  // namespace tdd
