#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include "camp/evaluation.hpp"

namespace camp::eval {

namespace fs = std::filesystem;

namespace {

class ScratchDir {
public:
    ScratchDir() {
        std::string tmpl = (fs::temp_directory_path() / "camp-verify-XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr) throw VerifierSetupError("cannot create scratch directory");
        path_ = tmpl;
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw VerifierSetupError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

VerifyOutcome run_command(const CommandSpec& spec, const fs::path& workdir) {
    const pid_t pid = ::fork();
    if (pid < 0) throw VerifierSetupError("fork failed");
    if (pid == 0) {
        ::setpgid(0, 0);
        if (::chdir(workdir.c_str()) != 0) ::_exit(127);
        const int devnull = ::open("/dev/null", O_RDWR);
        if (devnull >= 0) {
            ::dup2(devnull, STDIN_FILENO);
            ::dup2(devnull, STDOUT_FILENO);
            ::dup2(devnull, STDERR_FILENO);
        }
        ::execl("/bin/sh", "sh", "-c", spec.command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(spec.timeout_s);
    VerifyOutcome out;
    int status = 0;
    for (;;) {
        const pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid) break;
        if (r < 0) throw VerifierSetupError("waitpid failed");
        if (std::chrono::steady_clock::now() >= deadline) {
            ::kill(-pid, SIGKILL);
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            out.timed_out = true;
            return out;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (WIFEXITED(status)) out.exit_code = WEXITSTATUS(status);
    out.passed = out.exit_code == 0;
    return out;
}

}  // namespace

VerifyOutcome run_verifier(const std::string& sample, const Verifier& verifier, const fs::path& repo_fixture) {
    VerifyOutcome out;
    if (verifier.kind == Verifier::Kind::needle_match) {
        if (verifier.needle.empty()) throw VerifierSetupError("needle verifier without a needle");
        out.passed = verifier.regex ? std::regex_search(sample, std::regex(verifier.needle))
                                    : sample.find(verifier.needle) != std::string::npos;
        out.exit_code = out.passed ? 0 : 1;
        return out;
    }

    const CommandSpec& spec = verifier.command;
    if (spec.command.empty() || spec.file.empty() || spec.marker.empty())
        throw VerifierSetupError("command verifier needs command, file and marker");
    if (!fs::is_directory(repo_fixture)) throw VerifierSetupError("missing repo fixture " + repo_fixture.string());
    ScratchDir scratch;
    std::error_code ec;
    fs::copy(repo_fixture, scratch.path(), fs::copy_options::recursive, ec);
    if (ec) throw VerifierSetupError("cannot copy fixture: " + ec.message());
    const fs::path target = scratch.path() / spec.file;
    std::string text = read_file(target);
    const auto at = text.find(spec.marker);
    if (at == std::string::npos) throw VerifierSetupError("marker not found in " + spec.file);
    text.replace(at, spec.marker.size(), sample);
    {
        std::ofstream o(target, std::ios::binary | std::ios::trunc);
        o << text;
        if (!o) throw VerifierSetupError("cannot write " + target.string());
    }
    return run_command(spec, scratch.path());
}

bool verify(const std::string& sample, const Verifier& verifier, const fs::path& repo_fixture) {
    return run_verifier(sample, verifier, repo_fixture).passed;
}

}  // namespace camp::eval
