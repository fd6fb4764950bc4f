#include "imudr/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace imudr {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::pair<const char*, double Config::*>> fields() {
    return {
        {"sigma0_attitude", &Config::sigma0_attitude},
        {"sigma0_velocity", &Config::sigma0_velocity},
        {"sigma0_gyro_bias", &Config::sigma0_gyro_bias},
        {"sigma0_accel_bias", &Config::sigma0_accel_bias},
        {"sigma0_car_rotation", &Config::sigma0_car_rotation},
        {"sigma0_lever_arm", &Config::sigma0_lever_arm},
        {"sigma_gyro", &Config::sigma_gyro},
        {"sigma_accel", &Config::sigma_accel},
        {"sigma_gyro_bias_walk", &Config::sigma_gyro_bias_walk},
        {"sigma_accel_bias_walk", &Config::sigma_accel_bias_walk},
        {"sigma_car_rotation_walk", &Config::sigma_car_rotation_walk},
        {"sigma_lever_arm_walk", &Config::sigma_lever_arm_walk},
        {"sigma_lat", &Config::sigma_lat},
        {"sigma_up", &Config::sigma_up},
        {"beta", &Config::beta},
        {"gravity_x", &Config::gravity_x},
        {"gravity_y", &Config::gravity_y},
        {"gravity_z", &Config::gravity_z},
        {"theta_small", &Config::theta_small},
        {"dt_warn", &Config::dt_warn},
    };
}

}  // namespace

bool Config::assign(const std::string& key, const std::string& value) {
    for (const auto& [name, member] : fields()) {
        if (key == name) {
            size_t pos = 0;
            double v;
            try {
                v = std::stod(value, &pos);
            } catch (const std::exception&) {
                throw std::runtime_error("config: bad numeric value for '" + key + "'");
            }
            if (trim(value.substr(pos)) != "")
                throw std::runtime_error("config: trailing characters after value of '" + key + "'");
            this->*member = v;
            return true;
        }
    }
    return false;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    Config cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: missing '=' at " + path + ":" +
                                     std::to_string(line_no));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!cfg.assign(key, value))
            throw std::runtime_error("config: unknown key '" + key + "' at " + path + ":" +
                                     std::to_string(line_no));
    }
    return cfg;
}

void Config::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write " + path);
    char buf[64];
    for (const auto& [name, member] : fields()) {
        std::snprintf(buf, sizeof(buf), "%.17g", this->*member);
        out << name << " = " << buf << "\n";
    }
}

}  // namespace imudr
