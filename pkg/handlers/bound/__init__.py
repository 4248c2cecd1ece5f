from .router import create_bound_router
