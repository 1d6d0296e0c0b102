use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::Parser;

use cmaesig_core::Algorithm;
use cmaesig_session::{router, ManagerConfig, SessionManager};

#[derive(Parser)]
#[command(name = "session-server", version, about = "Serves live ranking sessions over HTTP")]
struct Cli {
    #[arg(long, env = "SESSION_HOST", default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    #[arg(long, env = "SESSION_PORT", default_value_t = 8080)]
    port: u16,
    /// Directory for per-session JSON-lines event logs.
    #[arg(long, env = "SESSION_LOG_DIR")]
    log_dir: Option<PathBuf>,
    /// Idle seconds before a session becomes read-only.
    #[arg(long, env = "SESSION_TIMEOUT_SECS", default_value_t = 24 * 3600)]
    timeout_secs: u64,
    /// Algorithm used when a create request names none.
    #[arg(long, env = "SESSION_ALGORITHM", default_value = "cmaesig")]
    default_algorithm: Algorithm,
    /// Fixed master seed for reproducible sessions.
    #[arg(long, env = "SESSION_SEED")]
    seed: Option<u64>,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let manager = Arc::new(SessionManager::new(ManagerConfig {
        log_dir: cli.log_dir,
        timeout: Duration::from_secs(cli.timeout_secs),
        default_algorithm: cli.default_algorithm,
        seed: cli.seed,
    }));
    let addr = SocketAddr::new(cli.host, cli.port);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(manager))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
