#include <string>
#include <vector>

#include "claimcheck/cli.hpp"

int main(int argc, char** argv)
{
    return claimcheck::cli::dispatch(std::vector<std::string>(argv, argv + argc));
}
