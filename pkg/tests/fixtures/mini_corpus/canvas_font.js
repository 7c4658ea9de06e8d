var probe = "mmmmmmmmmmlli";
var cf = document.createElement("canvas");
var fx = cf.getContext("2d");
var w = 0;
fx.font = "11px Arial";
w = w + fx.measureText(probe).width;
fx.font = "11px Verdana";
w = w + fx.measureText(probe).width;
fx.font = "11px Times New Roman";
w = w + fx.measureText(probe).width;
fx.font = "11px Courier New";
w = w + fx.measureText(probe).width;
fx.font = "11px Georgia";
w = w + fx.measureText(probe).width;
fx.font = "11px Tahoma";
w = w + fx.measureText(probe).width;
fx.font = "11px Trebuchet MS";
w = w + fx.measureText(probe).width;
fx.font = "11px Impact";
w = w + fx.measureText(probe).width;
fx.font = "11px Comic Sans MS";
w = w + fx.measureText(probe).width;
fx.font = "11px Lucida Console";
w = w + fx.measureText(probe).width;
fx.font = "11px Palatino Linotype";
w = w + fx.measureText(probe).width;
fx.font = "11px Garamond";
w = w + fx.measureText(probe).width;
fx.font = "11px Bookman Old Style";
w = w + fx.measureText(probe).width;
fx.font = "11px Arial Black";
w = w + fx.measureText(probe).width;
fx.font = "11px Arial Narrow";
w = w + fx.measureText(probe).width;
fx.font = "11px Century Gothic";
w = w + fx.measureText(probe).width;
fx.font = "11px Copperplate";
w = w + fx.measureText(probe).width;
fx.font = "11px Didot";
w = w + fx.measureText(probe).width;
fx.font = "11px Futura";
w = w + fx.measureText(probe).width;
fx.font = "11px Monaco";
w = w + fx.measureText(probe).width;
console.log("font width total", w);
window.__fp_hash = __sha256hex("fonts:" + w);
