use std::io::Write;
use std::sync::Arc;

use simpkit_core::humaneval::{api, EventStore};
use tower_http::services::ServeDir;

use crate::args::ServeArgs;
use crate::commands::ANNOTATION_LOG;
use crate::config::ToolConfig;
use crate::error::CliError;

pub fn serve(args: ServeArgs, config: &ToolConfig) -> Result<(), CliError> {
    let data = config.data_path(args.data.as_deref(), ANNOTATION_LOG)?;
    let store = Arc::new(EventStore::open(&data)?);
    let mut app = api::router(store);
    if let Some(dir) = &args.assets {
        if !dir.is_dir() {
            return Err(CliError::Config(format!(
                "{}: not a directory",
                dir.display()
            )));
        }
        app = app.fallback_service(ServeDir::new(dir));
    }

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
            .await
            .map_err(|e| {
                CliError::Config(format!("cannot bind {}:{}: {e}", args.host, args.port))
            })?;
        let addr = listener.local_addr()?;
        // the test harness and wrapper scripts read this line to find the port
        println!("listening on http://{addr}");
        std::io::stdout().flush()?;
        log::info!("annotation log {}", data.display());
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
