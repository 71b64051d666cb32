#pragma once

#include <string>

#include "tlnn/formula.hpp"

namespace tlnn {

/* Parses the ASCII formula grammar:
 *
 *   formula   := or
 *   or        := and ('|' and)*
 *   and       := unary ('&' unary)*
 *   unary     := '!' unary
 *              | ('G' | 'F') '[' int ',' int ']' [vector-weights] unary
 *              | primary
 *   primary   := '(' formula ')' | '(' predicate [scalar-weight] ')'
 *              | predicate
 *   predicate := 'x' ('>=' | '<') number
 *
 * Weight annotations:
 *   - '{w=[v0,v1,...]}' after a temporal interval gives the per-step
 *     window weights (one entry per step),
 *   - '{w=v}' after an '&' or '|' operand gives that operand's weight and
 *     binds to the nearest enclosing operator,
 *   - '{w=v}' inside a parenthesized predicate scales the predicate.
 *
 * Throws ParseError (with position) for syntax problems and FormulaError
 * for invariant violations such as tau1 > tau2 or negative weights. */
Formula parse_formula(const std::string& text);

}  // namespace tlnn
