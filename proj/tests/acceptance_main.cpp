#include "gsmp/acceptance.hpp"

int main() { return gsmp::acceptance_main(); }
