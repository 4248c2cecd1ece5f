# Команда verify: перекрестные проверки модулей
from .router import create_verify_router
