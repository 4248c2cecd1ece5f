"""
Команда curve: таблицы кривых сравнения стратегий
"""

from .router import create_curve_router

__all__ = ["create_curve_router"]
