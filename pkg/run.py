import logging
import sys
from pathlib import Path

import uvicorn

# Make the app package importable when launched from elsewhere
backend_dir = Path(__file__).parent.absolute()
sys.path.insert(0, str(backend_dir))

from app.config import settings  # noqa: E402

logger = logging.getLogger("run")

if __name__ == "__main__":
    try:
        logger.info(f"Starting valuation lab API from {backend_dir} on port {settings.port}")
        uvicorn.run(
            "app.main:app",
            host="0.0.0.0",
            port=settings.port,
            reload=False,
            log_level=settings.log_level.lower(),
        )
    except Exception as e:
        logger.error(f"Error starting server: {str(e)}", exc_info=True)
        sys.exit(1)
