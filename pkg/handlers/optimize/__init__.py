from .router import create_optimize_router
