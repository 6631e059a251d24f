use beliefminer_server::{run, ServerConfig};
use tracing_subscriber::EnvFilter;

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let result = match ServerConfig::from_env() {
        Ok(cfg) => run(cfg).await,
        Err(e) => Err(e.into()),
    };
    if let Err(e) = result {
        eprintln!("beliefminer-server: {e}");
        std::process::exit(1);
    }
}
