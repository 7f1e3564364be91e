use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("CONVBF_LOG"))
        .format_timestamp(None)
        .init();
    ExitCode::from(convbf::cli::run(std::env::args()) as u8)
}
