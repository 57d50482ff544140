"""wpaa - 加权伪概自守函数与分数阶 Volterra 方程的数值工具箱。"""

__version__ = "0.1.0"
