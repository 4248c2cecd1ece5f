from .router import create_simulate_router
