#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "pgm/learning.hpp"

namespace pgm::io {

// Plain-text model format. Variables are numbered 1..N; sizes on the second
// line give each variable's alphabet.
//
//   MARKOV                       BAYES
//   <N>                          <N>
//   <card_1> ... <card_N>        <card_1> ... <card_N>
//   <factor count>               then, for each variable 1..N:
//   then per factor:               <#parents> <parent ids...>
//     <arity> <var ids...>         <table len> <values...>   (child fastest)
//     <table len> <values...>
//
// Dataset files are comma-separated: a header row of variable ids, then one
// row per sample with state indices; `?` marks a missing entry.
//
// Image files: "W H" on the first line, then H rows of W entries in {-1,+1}.
//
// Crowd answer files: one "worker,task,answer" triple per line (answer is
// -1 or +1); an optional header line is skipped.

using ParsedModel = std::variant<FactorGraph, DirectedModel>;

ParsedModel parse_model(std::istream& in, const std::string& name = "<model>");
ParsedModel load_model(const std::string& path);

std::string write_model(const FactorGraph& g);
std::string write_model(const DirectedModel& m);
void save_model(const ParsedModel& m, const std::string& path);

Dataset parse_dataset(std::istream& in, const std::string& name = "<dataset>");
Dataset load_dataset(const std::string& path);
std::string write_dataset(const Dataset& d);
void save_dataset(const Dataset& d, const std::string& path);

struct Image {
    int width = 0;
    int height = 0;
    std::vector<int> pixels;  // row-major, each -1 or +1

    int at(int row, int col) const { return pixels[static_cast<std::size_t>(row * width + col)]; }
};

Image parse_image(std::istream& in, const std::string& name = "<image>");
Image load_image(const std::string& path);
std::string write_image(const Image& img);

CrowdAnswers parse_answers(std::istream& in, const std::string& name = "<answers>");
CrowdAnswers load_answers(const std::string& path);

}  // namespace pgm::io
