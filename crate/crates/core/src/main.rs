use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPIDER_LOG", "warn")).init();
    spider_pir::cli::main_from_args(std::env::args_os())
}
